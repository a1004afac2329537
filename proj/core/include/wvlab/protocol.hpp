#ifndef WVLAB_PROTOCOL_HPP
#define WVLAB_PROTOCOL_HPP

#include <cstdint>
#include <string>

#include "wvlab/pointer.hpp"
#include "wvlab/weakvalues.hpp"

namespace wvlab {

// Full experiment description.  Particle 1 carries the observable and the
// pointer; particles 2-3 hold the shared resource; Bob postselects on 3.
struct Scenario {
  EntangledResource resource;
  Observable observable;                    // 2x2, particle 1
  std::variant<PureState, DensityOp> pre;   // particle 1
  std::variant<PureState, DensityOp> post;  // particle 3
  double g = 0.01;
  GaussianPointer pointer;
  int accepted_bell_outcome = 0; // 1..4; 0 = resource default (4, NonMax: 2)

  int accepted_outcome() const;
};

struct TranscriptEvent {
  std::string name;
  std::string detail;
};

struct ProtocolResult {
  cplx analytic_wv{};
  cplx pointer_estimate{};
  bool estimate_valid = false;
  double pointer_mean_q = 0.0; // conditional <Q> at the scenario's g
  double pointer_mean_p = 0.0;
  std::array<double, 4> bell_outcome_probs{};
  double joint_success_prob = 0.0;
  std::uint64_t shots_used = 0; // 0 in deterministic mode
  std::vector<TranscriptEvent> transcript;
};

// Numeric fields bitwise equal and the same transcript event sequence.
bool results_equivalent(const ProtocolResult& a, const ProtocolResult& b);

// Exact conditional run: Alice's Bell outcome fixed to the accepted one,
// Bob's projection successful.  pointer_estimate comes from a g sweep
// (default: g, g/10, g/100) extrapolated to zero; analytic_wv from the
// trace-ratio weak value of the same pre/postselection.
ProtocolResult run_conditional(const Scenario& s, std::span<const double> g_sweep = {});

// Born-rule Monte Carlo of the full choreography.  Deterministic given
// (scenario, shots, seed); counter-based RNG keyed per shot.
ProtocolResult sample_shots(const Scenario& s, std::uint64_t shots, std::uint64_t seed);

// Exact joint probability of (accepted Bell outcome AND Bob success) after
// coupling at s.g.
double success_probability(const Scenario& s);

} // namespace wvlab

#endif
