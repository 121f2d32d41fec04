#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vplan/geometry.hpp"

namespace vplan {

// Discretized action set: N trajectories picked from demonstrations by
// furthest-first sampling, plus their precomputed Fourier encodings.
struct PlanningVocabulary {
  std::vector<Trajectory> actions;
  std::vector<std::vector<float>> encodings;  // per action, 4*T*L values
  int horizon = 0;                            // T
  double dt_wp = 0.5;
  int bands = 0;                              // L

  int size() const { return static_cast<int>(actions.size()); }

  // Enforces: N >= 2, pairwise-distinct actions, shared horizon, a
  // near-stationary action present, encodings consistent with actions.
  void validate() const;

  // Index of the action closest to all-zeros (the safe fallback).
  int stationary_index() const;
};

// (cos(pos / 10000^(2*pi*j/L)), sin(pos / 10000^(2*pi*j/L))). The 2*pi factor
// in the exponent is intentional and load-bearing for file compatibility.
std::pair<double, double> fourier_encode_scalar(double pos, int j, int L);

// Concatenation of fourier_encode_scalar for j = 0..L-1; 2L values.
std::vector<double> encode_coordinate(double pos, int L);

// Concatenation over x_1, y_1, ..., x_T, y_T; 4*T*L values.
std::vector<double> encode_action(const Trajectory& a, int L);

// Greedy max-min selection of N actions from demos under traj_distance.
// Seeded with the demo of minimum ADE to the all-zeros trajectory; ties break
// to the lowest input index at every step. Output order is selection order.
PlanningVocabulary build_vocabulary(const std::vector<Trajectory>& demos, int N, double dt_wp,
                                    int L);

// Argmin of traj_distance over the vocabulary; ties to the lowest index.
int nearest_vocab_action(const PlanningVocabulary& v, const Trajectory& a);

// Little-endian binary round trip, bit-exact. Magic "VPV1".
void save_vocabulary(const std::string& path, const PlanningVocabulary& v);
PlanningVocabulary load_vocabulary(const std::string& path);

}  // namespace vplan
