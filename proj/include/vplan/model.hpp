#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vplan/autodiff.hpp"
#include "vplan/errors.hpp"

namespace vplan {

// Fixed per-group feature widths. Scene feature extraction (scene.cpp) and the
// embedding parameter shapes below must agree on these.
inline constexpr int kResamplePoints = 20;
inline constexpr int kMaxAgents = 16;
inline constexpr int kMaxTrafficElements = 4;
inline constexpr int kMapFeatDim = 2 * kResamplePoints;            // resampled xy
inline constexpr int kAgentFeatDim = 4 + 2 + 1 + 12;               // pose, box, speed, future
inline constexpr int kTrafficFeatDim = 2 + 4 + 1 + 4;              // kind, state, affects, line
inline constexpr int kNaviFeatDim = 6 + 2;                         // command one-hot, target
inline constexpr int kStateFeatDim = 1 + 1 + 3;                    // speed, yaw rate, control

struct ModelConfig {
  int width = 128;      // token width d
  int heads = 4;
  int depth = 3;
  int ffn_width = 256;
  int bands = 8;        // frequency bands L per scalar
  int horizon = 6;      // waypoints T per action
  int vocab_size = 4096;

  int action_dim() const { return 4 * horizon * bands; }

  void validate() const {
    if (width <= 0 || heads <= 0 || depth < 0 || ffn_width <= 0 || bands <= 0 || horizon <= 0 ||
        vocab_size <= 0)
      throw ConfigError("model config fields must be positive (depth may be 0)");
    if (width % heads != 0) throw ConfigError("model width must be divisible by head count");
  }
};

// Zeroes a token group after embedding (directional ablations).
struct AblationFlags {
  bool drop_map = false;
  bool drop_agents = false;
  bool drop_traffic = false;
  bool drop_navi = false;
  bool drop_state = false;
};

// Per-group feature rows extracted from a snapshot. Row counts: map = number of
// polylines, agents/traffic capped, navi/state always one row.
template <typename S>
struct SceneFeatures {
  ad::Tensor<S> map;      // (n_polylines, kMapFeatDim)
  ad::Tensor<S> agents;   // (n_agents, kAgentFeatDim)
  ad::Tensor<S> traffic;  // (n_traffic, kTrafficFeatDim)
  ad::Tensor<S> navi;     // (1, kNaviFeatDim)
  ad::Tensor<S> state;    // (1, kStateFeatDim)

  template <typename T>
  SceneFeatures<T> cast() const {
    return {map.template cast<T>(), agents.template cast<T>(), traffic.template cast<T>(),
            navi.template cast<T>(), state.template cast<T>()};
  }
};

// Tape node ids of the embedded scene.
struct EnvRefs {
  int env = -1;    // (M, d)
  int navi = -1;   // (1, d)
  int state = -1;  // (1, d)
};

namespace graph {

// tok = relu(x W1 + b1) W2 + b2, parameters looked up by prefix.
template <typename S>
int mlp2(ad::Tape<S>& tp, int x, ad::ParamStore<S>& ps, const std::string& prefix) {
  int h = tp.relu(ad::linear(tp, x, tp.param(prefix + ".w1", ps), tp.param(prefix + ".b1", ps)));
  return ad::linear(tp, h, tp.param(prefix + ".w2", ps), tp.param(prefix + ".b2", ps));
}

// Scaled dot-product cross-attention, heads concatenated, output projection.
template <typename S>
int multi_head_cross_attention(ad::Tape<S>& tp, int q_tokens, int kv_tokens,
                               ad::ParamStore<S>& ps, const std::string& prefix, int heads) {
  const int d = tp.val(q_tokens).cols;
  if (tp.val(kv_tokens).cols != d)
    throw ShapeError("attention: q width " + std::to_string(d) + " != kv width " +
                     std::to_string(tp.val(kv_tokens).cols));
  if (d % heads != 0) throw ShapeError("attention: width not divisible by head count");
  const int dh = d / heads;
  int q = ad::linear(tp, q_tokens, tp.param(prefix + ".wq", ps), tp.param(prefix + ".bq", ps));
  int k = ad::linear(tp, kv_tokens, tp.param(prefix + ".wk", ps), tp.param(prefix + ".bk", ps));
  int v = ad::linear(tp, kv_tokens, tp.param(prefix + ".wv", ps), tp.param(prefix + ".bv", ps));
  std::vector<int> outs;
  outs.reserve(heads);
  const S scale = static_cast<S>(1.0 / std::sqrt(static_cast<double>(dh)));
  for (int h = 0; h < heads; ++h) {
    int qh = tp.slice_cols(q, h * dh, (h + 1) * dh);
    int kh = tp.slice_cols(k, h * dh, (h + 1) * dh);
    int vh = tp.slice_cols(v, h * dh, (h + 1) * dh);
    int att = tp.softmax_rows(tp.mul_const(tp.matmul_nt(qh, kh), scale));
    outs.push_back(tp.matmul(att, vh));
  }
  int cat = tp.concat_cols(std::span<const int>(outs));
  return ad::linear(tp, cat, tp.param(prefix + ".wo", ps), tp.param(prefix + ".bo", ps));
}

// depth x (cross-attention + residual + LN + feed-forward + residual + LN),
// post-norm. depth=0 returns q_tokens unchanged.
template <typename S>
int transformer_decoder_stack(ad::Tape<S>& tp, int q_tokens, int kv_tokens,
                              ad::ParamStore<S>& ps, const std::string& prefix_base, int depth,
                              int heads) {
  int h = q_tokens;
  for (int l = 0; l < depth; ++l) {
    const std::string p = prefix_base + std::to_string(l);
    int att = multi_head_cross_attention(tp, h, kv_tokens, ps, p + ".attn", heads);
    h = tp.layer_norm(tp.add(h, att), tp.param(p + ".ln1.g", ps), tp.param(p + ".ln1.b", ps));
    int f1 = tp.relu(ad::linear(tp, h, tp.param(p + ".ff.w1", ps), tp.param(p + ".ff.b1", ps)));
    int f2 = ad::linear(tp, f1, tp.param(p + ".ff.w2", ps), tp.param(p + ".ff.b2", ps));
    h = tp.layer_norm(tp.add(h, f2), tp.param(p + ".ln2.g", ps), tp.param(p + ".ln2.b", ps));
  }
  return h;
}

// Two-layer perceptron per token group; map/agent/traffic tokens concatenated
// along the token axis. Empty groups are skipped; ablated groups are zeroed.
template <typename S>
EnvRefs embed_scene_graph(ad::Tape<S>& tp, const SceneFeatures<S>& f, ad::ParamStore<S>& ps,
                          const AblationFlags& ab = {}) {
  std::vector<int> groups;
  auto add_group = [&](const ad::Tensor<S>& feat, const char* name, bool drop) {
    if (feat.rows == 0) return;
    int tok = mlp2(tp, tp.leaf(feat), ps, std::string("embed.") + name);
    if (drop) tok = tp.mul_const(tok, S(0));
    groups.push_back(tok);
  };
  add_group(f.map, "map", ab.drop_map);
  add_group(f.agents, "agent", ab.drop_agents);
  add_group(f.traffic, "traffic", ab.drop_traffic);
  if (groups.empty()) throw ValidationError("embed_scene: no environment tokens (M must be >= 1)");
  EnvRefs out;
  out.env = groups.size() == 1 ? groups[0] : tp.concat_rows(std::span<const int>(groups));
  out.navi = mlp2(tp, tp.leaf(f.navi), ps, "embed.navi");
  if (ab.drop_navi) out.navi = tp.mul_const(out.navi, S(0));
  out.state = mlp2(tp, tp.leaf(f.state), ps, "embed.state");
  if (ab.drop_state) out.state = tp.mul_const(out.state, S(0));
  return out;
}

// Per-action logits: input projection, decoder stack against env tokens, navi
// and state embeddings broadcast-added to every planning token, two-layer head.
// Returns the id of an (n_actions, 1) tensor.
template <typename S>
int score_actions_graph(ad::Tape<S>& tp, int action_encodings, const EnvRefs& env,
                        ad::ParamStore<S>& ps, const ModelConfig& cfg) {
  if (tp.val(action_encodings).cols != cfg.action_dim())
    throw ShapeError("score_actions: encoding width " +
                     std::to_string(tp.val(action_encodings).cols) + " != 4*T*L = " +
                     std::to_string(cfg.action_dim()));
  int tokens = ad::linear(tp, action_encodings, tp.param("proj.w", ps), tp.param("proj.b", ps));
  int h = transformer_decoder_stack(tp, tokens, env.env, ps, "dec", cfg.depth, cfg.heads);
  h = tp.add_rowvec(h, env.navi);
  h = tp.add_rowvec(h, env.state);
  int t = tp.relu(ad::linear(tp, h, tp.param("head.w1", ps), tp.param("head.b1", ps)));
  return ad::linear(tp, t, tp.param("head.w2", ps), tp.param("head.b2", ps));
}

}  // namespace graph

// Creates every parameter of the planning model in a fixed order from a seeded
// generator. LN gains start at 1 and LN biases at 0; everything else is
// uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename S>
ad::ParamStore<S> init_planner_params(const ModelConfig& cfg, uint32_t seed) {
  cfg.validate();
  std::mt19937 rng(seed);
  ad::ParamStore<S> ps;
  const int d = cfg.width;
  auto lin = [&](const std::string& prefix, int in, int out) {
    ps.add(prefix + ".w1", ad::uniform_init<S>(in, d, in, rng));
    ps.add(prefix + ".b1", ad::uniform_init<S>(1, d, in, rng));
    ps.add(prefix + ".w2", ad::uniform_init<S>(d, out, d, rng));
    ps.add(prefix + ".b2", ad::uniform_init<S>(1, out, d, rng));
  };
  lin("embed.map", kMapFeatDim, d);
  lin("embed.agent", kAgentFeatDim, d);
  lin("embed.traffic", kTrafficFeatDim, d);
  lin("embed.navi", kNaviFeatDim, d);
  lin("embed.state", kStateFeatDim, d);
  ps.add("proj.w", ad::uniform_init<S>(cfg.action_dim(), d, cfg.action_dim(), rng));
  ps.add("proj.b", ad::uniform_init<S>(1, d, cfg.action_dim(), rng));
  for (int l = 0; l < cfg.depth; ++l) {
    const std::string p = "dec" + std::to_string(l);
    for (const char* nm : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo"})
      ps.add(p + nm, ad::uniform_init<S>(d, d, d, rng));
    for (const char* nm : {".attn.bq", ".attn.bk", ".attn.bv", ".attn.bo"})
      ps.add(p + nm, ad::uniform_init<S>(1, d, d, rng));
    ad::Tensor<S> ones(1, d);
    std::fill(ones.v.begin(), ones.v.end(), S(1));
    ps.add(p + ".ln1.g", ones);
    ps.add(p + ".ln1.b", ad::Tensor<S>::zeros(1, d));
    ps.add(p + ".ff.w1", ad::uniform_init<S>(d, cfg.ffn_width, d, rng));
    ps.add(p + ".ff.b1", ad::uniform_init<S>(1, cfg.ffn_width, d, rng));
    ps.add(p + ".ff.w2", ad::uniform_init<S>(cfg.ffn_width, d, cfg.ffn_width, rng));
    ps.add(p + ".ff.b2", ad::uniform_init<S>(1, d, cfg.ffn_width, rng));
    ps.add(p + ".ln2.g", ones);
    ps.add(p + ".ln2.b", ad::Tensor<S>::zeros(1, d));
  }
  ps.add("head.w1", ad::uniform_init<S>(d, d, d, rng));
  ps.add("head.b1", ad::uniform_init<S>(1, d, d, rng));
  ps.add("head.w2", ad::uniform_init<S>(d, 1, d, rng));
  ps.add("head.b2", ad::uniform_init<S>(1, 1, d, rng));
  return ps;
}

// Checkpoint io, little-endian binary: magic "VPC1", u32 version, config block
// (d, heads, depth, L, T, N as u32), then named records (u32 name length, name
// bytes, u32 rows, u32 cols, f32 payload). Adam state rides along as
// "adam.m.<name>" / "adam.v.<name>" records plus a single "adam.step" record.
// Round-trips are bit-exact.
void save_checkpoint(const std::string& path, const ModelConfig& cfg,
                     const ad::ParamStore<float>& params);
std::pair<ModelConfig, ad::ParamStore<float>> load_checkpoint(const std::string& path);

}  // namespace vplan
