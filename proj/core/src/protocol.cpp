#include "wvlab/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "wvlab/rng.hpp"

namespace wvlab {

namespace {

// Pure tripartite preparation with its mixture weight.
struct Component {
  double weight;
  PureState in; // dims {2,2,2}
};

// Per-component branch data, independent of g: eigenvalue a_n of each
// coupling branch and the particle-3 kets v[i][n] = <B_i|_12 P_n |in>.
struct CompBranches {
  double weight;
  std::vector<double> eig;
  std::array<std::vector<Vec>, 4> v;
};

struct Pipeline {
  std::array<PureState, 4> basis;            // Alice's Bell-type basis
  std::vector<std::pair<double, Vec>> bob;   // (acceptance weight, eigenket), complete
  std::vector<Component> comps;
  std::vector<CompBranches> analysis;
  DensityOp rho_pre;  // particle 1
  DensityOp rho_post; // particle 3, after Bob's basis rotation
  int accepted;       // 0-based
};

std::vector<std::pair<double, Vec>> eigen_ensemble(const Mat& m, bool keep_zero) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  std::vector<std::pair<double, Vec>> out;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const double p = es.eigenvalues()(k);
    if (!keep_zero && p <= 1e-14) continue;
    out.emplace_back(std::max(p, 0.0), es.eigenvectors().col(k));
  }
  return out;
}

Vec contract_bell(const Vec& bell, const Vec& branch) {
  Vec out = Vec::Zero(2);
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const cplx w = std::conj(bell(2 * a + b));
      out(0) += w * branch(4 * a + 2 * b + 0);
      out(1) += w * branch(4 * a + 2 * b + 1);
    }
  return out;
}

DensityOp as_density(const std::variant<PureState, DensityOp>& v) {
  if (std::holds_alternative<PureState>(v))
    return DensityOp::from_pure(std::get<PureState>(v));
  return std::get<DensityOp>(v);
}

Pipeline build_pipeline(const Scenario& s) {
  if (s.g < 0.0) throw Error(ErrorKind::InvalidArgument, "coupling strength g must be >= 0");
  if (s.pointer.sigma <= 0.0)
    throw Error(ErrorKind::InvalidArgument, "pointer sigma must be positive");

  Pipeline p{.basis = BellBasis::standard().states,
             .bob = {},
             .comps = {},
             .analysis = {},
             .rho_pre = as_density(s.pre),
             .rho_post = as_density(s.post),
             .accepted = s.accepted_outcome() - 1};

  const bool nonmax = std::holds_alternative<NonMax>(s.resource);
  if (nonmax) p.basis = GeneralizedBellBasis(std::get<NonMax>(s.resource).n).states;

  if (p.rho_pre.dim() != 2 || p.rho_post.dim() != 2 || s.observable.dim() != 2)
    throw Error(ErrorKind::InvalidArgument, "protocol scenarios are qubit-sized");

  // Bob measures the eigenbasis of rho_f, rotated by sz for the non-maximal
  // resource, and accepts outcome k with probability q_k.
  p.bob = eigen_ensemble(p.rho_post.mat(), /*keep_zero=*/true);
  if (nonmax) {
    for (auto& [q, ket] : p.bob) ket = pauli_z() * ket;
    p.rho_post = DensityOp({2}, pauli_z() * p.rho_post.mat() * pauli_z());
  }

  // Mixture of pure tripartite preparations.
  std::vector<std::pair<double, Vec>> pre = eigen_ensemble(p.rho_pre.mat(), false);
  std::vector<std::pair<double, Vec>> res;
  if (resource_is_pure(s.resource)) {
    res.emplace_back(1.0, make_pure_resource(s.resource).amps());
  } else {
    res = eigen_ensemble(make_resource(s.resource).mat(), false);
  }
  for (const auto& [pl, l] : pre)
    for (const auto& [wj, xi] : res)
      p.comps.push_back({pl * wj, PureState({2, 2, 2}, kron(l, xi))});

  for (const auto& comp : p.comps) {
    CompBranches cb{comp.weight, {}, {}};
    for (const auto& br : couple(comp.in, s.observable, 0)) {
      cb.eig.push_back(br.eigenvalue);
      for (int i = 0; i < 4; ++i)
        cb.v[i].push_back(contract_bell(p.basis[i].amps(), br.projected.amps()));
    }
    p.analysis.push_back(std::move(cb));
  }
  return p;
}

std::array<double, 4> alice_probs(const CompBranches& cb, double g, double sigma) {
  std::array<double, 4> probs{};
  const int nb = static_cast<int>(cb.eig.size());
  for (int i = 0; i < 4; ++i) {
    double acc = 0.0;
    for (int m = 0; m < nb; ++m)
      for (int n = 0; n < nb; ++n)
        acc += (cb.v[i][m].dot(cb.v[i][n]) *
                gaussian_overlap(g * cb.eig[m], g * cb.eig[n], sigma))
                   .real();
    probs[i] = std::max(acc, 0.0);
  }
  return probs;
}

BranchedPointer conditional_pointer(const CompBranches& cb, int outcome, const Vec& bob_ket,
                                    double g, double sigma) {
  BranchedPointer bp{sigma, {}};
  for (size_t n = 0; n < cb.eig.size(); ++n)
    bp.branches.push_back({bob_ket.dot(cb.v[outcome][n]), g * cb.eig[n]});
  return bp;
}

double max_conditional_coef(const Pipeline& p, double g) {
  double mx = 0.0;
  for (const auto& cb : p.analysis)
    for (const auto& [q, ket] : p.bob) {
      if (q <= 1e-14) continue;
      for (const auto& br : conditional_pointer(cb, p.accepted, ket, g, 1.0).branches)
        mx = std::max(mx, std::abs(br.coef));
    }
  return mx;
}

// Probability-weighted conditional moments over the accepted ensemble.
struct WeightedMoments {
  double mean_q = 0.0;
  double mean_p = 0.0;
  double weight = 0.0;
};

WeightedMoments accepted_moments(const Pipeline& p, double g, double sigma) {
  WeightedMoments wm;
  for (const auto& cb : p.analysis)
    for (const auto& [q, ket] : p.bob) {
      if (q <= 1e-14) continue;
      BranchedPointer bp = conditional_pointer(cb, p.accepted, ket, g, sigma);
      const double prob = bp.norm_squared();
      if (prob <= 0.0) continue;
      const auto mom = moments_closed(bp);
      const double w = cb.weight * q * prob;
      wm.mean_q += w * mom.mean_q;
      wm.mean_p += w * mom.mean_p;
      wm.weight += w;
    }
  if (wm.weight > 0.0) {
    wm.mean_q /= wm.weight;
    wm.mean_p /= wm.weight;
  }
  return wm;
}

double joint_success(const Pipeline& p, double g, double sigma) {
  double joint = 0.0;
  for (const auto& cb : p.analysis)
    for (const auto& [q, ket] : p.bob) {
      if (q <= 1e-14) continue;
      joint += cb.weight * q *
               conditional_pointer(cb, p.accepted, ket, g, sigma).norm_squared();
    }
  return joint;
}

cplx analytic_weak_value(const Scenario& s, const Pipeline& p) {
  const DensityOp chi_in = tensor(p.rho_pre, make_resource(s.resource));
  const DensityOp accepted_proj = DensityOp::from_pure(p.basis[p.accepted]);
  const DensityOp chi_fin = tensor(accepted_proj, p.rho_post);
  const Observable a_full(embed(s.observable.mat(), {2, 2, 2}, 0));
  return weak_value_trace_composite(a_full, chi_in, chi_fin).value;
}

std::vector<TranscriptEvent> make_transcript(const Pipeline& p, const std::string& mode) {
  return {{"preselect", "components=" + std::to_string(p.comps.size())},
          {"couple", "branches=" + std::to_string(p.analysis.empty() ? 0 : p.analysis[0].eig.size())},
          {"bell_measure", "accepted=B" + std::to_string(p.accepted + 1)},
          {"classical_msg", "alice->bob bell_outcome"},
          {"bob_project", "outcomes=" + std::to_string(p.bob.size())},
          {"classical_msg", "bob->alice postselect_result"},
          {"readout", mode}};
}

// Inverse-CDF sampler over a normalized density on a uniform grid.
struct GridSampler {
  double lo = 0.0;
  double step = 0.0;
  std::vector<double> cdf;

  bool valid() const { return !cdf.empty(); }

  double draw(double u) const {
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    const size_t j = std::min<size_t>(it - cdf.begin(), cdf.size() - 1);
    const double prev = j == 0 ? 0.0 : cdf[j - 1];
    const double mass = cdf[j] - prev;
    const double frac = mass > 0.0 ? (u - prev) / mass : 0.5;
    return lo + (static_cast<double>(j) + frac) * step;
  }
};

GridSampler make_sampler(const std::vector<double>& density, const Grid& grid) {
  GridSampler s{grid.min, (grid.max - grid.min) / grid.points, {}};
  s.cdf.resize(density.size());
  double acc = 0.0;
  for (size_t j = 0; j < density.size(); ++j) {
    acc += density[j];
    s.cdf[j] = acc;
  }
  s.cdf.back() = 1.0;
  return s;
}

int draw_index(std::span<const double> pdf, double u) {
  double acc = 0.0;
  for (size_t i = 0; i < pdf.size(); ++i) {
    acc += pdf[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(pdf.size()) - 1;
}

} // namespace

int Scenario::accepted_outcome() const {
  if (accepted_bell_outcome == 0)
    return std::holds_alternative<NonMax>(resource) ? 2 : 4;
  if (accepted_bell_outcome < 1 || accepted_bell_outcome > 4)
    throw Error(ErrorKind::InvalidArgument, "accepted Bell outcome must be in 1..4");
  return accepted_bell_outcome;
}

bool results_equivalent(const ProtocolResult& a, const ProtocolResult& b) {
  auto same = [](double x, double y) {
    return std::memcmp(&x, &y, sizeof(double)) == 0;
  };
  if (!same(a.analytic_wv.real(), b.analytic_wv.real()) ||
      !same(a.analytic_wv.imag(), b.analytic_wv.imag()) ||
      !same(a.pointer_estimate.real(), b.pointer_estimate.real()) ||
      !same(a.pointer_estimate.imag(), b.pointer_estimate.imag()) ||
      a.estimate_valid != b.estimate_valid ||
      !same(a.pointer_mean_q, b.pointer_mean_q) ||
      !same(a.pointer_mean_p, b.pointer_mean_p) ||
      !same(a.joint_success_prob, b.joint_success_prob) || a.shots_used != b.shots_used)
    return false;
  for (int i = 0; i < 4; ++i)
    if (!same(a.bell_outcome_probs[i], b.bell_outcome_probs[i])) return false;
  if (a.transcript.size() != b.transcript.size()) return false;
  for (size_t i = 0; i < a.transcript.size(); ++i)
    if (a.transcript[i].name != b.transcript[i].name) return false;
  return true;
}

ProtocolResult run_conditional(const Scenario& s, std::span<const double> g_sweep) {
  Pipeline p = build_pipeline(s);

  if (max_conditional_coef(p, s.g) <= 1e-14)
    throw Error(ErrorKind::ImpossiblePostselection,
                "accepted outcome and postselection annihilate every branch");

  ProtocolResult result;
  result.analytic_wv = analytic_weak_value(s, p);

  std::array<double, 4> probs{};
  for (const auto& cb : p.analysis) {
    const auto cp = alice_probs(cb, s.g, s.pointer.sigma);
    for (int i = 0; i < 4; ++i) probs[i] += cb.weight * cp[i];
  }
  result.bell_outcome_probs = probs;
  result.joint_success_prob = joint_success(p, s.g, s.pointer.sigma);

  const auto at_g = accepted_moments(p, s.g, s.pointer.sigma);
  result.pointer_mean_q = at_g.mean_q;
  result.pointer_mean_p = at_g.mean_p;

  std::vector<double> sweep(g_sweep.begin(), g_sweep.end());
  if (sweep.empty() && s.g > 0.0) sweep = {s.g, s.g / 10.0, s.g / 100.0};
  if (!sweep.empty()) {
    const double s2 = s.pointer.sigma * s.pointer.sigma;
    std::vector<double> re(sweep.size()), im(sweep.size());
    for (size_t i = 0; i < sweep.size(); ++i) {
      const auto wm = accepted_moments(p, sweep[i], s.pointer.sigma);
      if (wm.weight <= 0.0)
        throw Error(ErrorKind::ImpossiblePostselection, "zero accepted weight in g sweep");
      re[i] = wm.mean_q / sweep[i];
      im[i] = 2.0 * s2 * wm.mean_p / sweep[i];
    }
    result.pointer_estimate = {extrapolate_even(sweep, re), extrapolate_even(sweep, im)};
    result.estimate_valid = true;
  }

  result.shots_used = 0;
  result.transcript = make_transcript(p, "conditional");
  return result;
}

double success_probability(const Scenario& s) {
  Pipeline p = build_pipeline(s);
  return joint_success(p, s.g, s.pointer.sigma);
}

ProtocolResult sample_shots(const Scenario& s, std::uint64_t shots, std::uint64_t seed) {
  if (shots < 1) throw Error(ErrorKind::InvalidArgument, "shots must be >= 1");
  Pipeline p = build_pipeline(s);
  const double sigma = s.pointer.sigma;

  // Distributions fixed across shots.
  std::vector<double> comp_pdf;
  for (const auto& c : p.comps) comp_pdf.push_back(c.weight);

  std::vector<std::array<double, 4>> alice_pdf;
  for (const auto& cb : p.analysis) alice_pdf.push_back(alice_probs(cb, s.g, sigma));

  // Bob outcome law given the accepted Bell outcome, P(k|c) (unnormalized by
  // p_accepted; draw_index normalizes implicitly because we divide first).
  const size_t nk = p.bob.size();
  std::vector<std::vector<double>> bob_pdf(p.analysis.size());
  std::vector<std::vector<GridSampler>> pos_sampler(p.analysis.size());
  std::vector<std::vector<GridSampler>> mom_sampler(p.analysis.size());
  for (size_t c = 0; c < p.analysis.size(); ++c) {
    bob_pdf[c].resize(nk);
    pos_sampler[c].resize(nk);
    mom_sampler[c].resize(nk);
    const double pacc = std::max(alice_pdf[c][p.accepted], 1e-300);
    for (size_t k = 0; k < nk; ++k) {
      BranchedPointer bp = conditional_pointer(p.analysis[c], p.accepted, p.bob[k].second,
                                               s.g, sigma);
      const double prob = bp.norm_squared();
      bob_pdf[c][k] = prob / pacc;
      if (prob <= 0.0 || p.bob[k].first <= 1e-14) continue;
      double lo = 0.0, hi = 0.0;
      for (const auto& br : bp.branches) {
        lo = std::min(lo, br.shift);
        hi = std::max(hi, br.shift);
      }
      const Grid qgrid{lo - 12.0 * sigma, hi + 12.0 * sigma, 4096};
      const double pspread = 1.0 / (2.0 * sigma);
      const Grid pgrid{-12.0 * pspread, 12.0 * pspread, 4096};
      pos_sampler[c][k] = make_sampler(position_density(bp, qgrid), qgrid);
      mom_sampler[c][k] = make_sampler(momentum_density(bp, pgrid), pgrid);
    }
  }

  // Batched accumulation: a parallel implementation that splits on the same
  // batch boundaries and merges in batch order reproduces these bits.
  constexpr std::uint64_t kBatch = 4096;
  std::array<std::uint64_t, 4> counts{};
  std::uint64_t accepted = 0;
  double sum_q = 0.0, sum_p = 0.0;
  for (std::uint64_t start = 0; start < shots; start += kBatch) {
    const std::uint64_t end = std::min(shots, start + kBatch);
    double batch_q = 0.0, batch_p = 0.0;
    for (std::uint64_t shot = start; shot < end; ++shot) {
      CounterRng rng(seed, shot);
      const int c = draw_index(comp_pdf, rng.next_double());
      const int i = draw_index(alice_pdf[c], rng.next_double());
      ++counts[i];
      if (i != p.accepted) continue;
      const int k = draw_index(bob_pdf[c], rng.next_double());
      const double uq = rng.next_double();
      if (uq >= p.bob[k].first) continue; // Bob rejects this eigenvalue
      if (!pos_sampler[c][k].valid()) continue;
      ++accepted;
      batch_q += pos_sampler[c][k].draw(rng.next_double());
      batch_p += mom_sampler[c][k].draw(rng.next_double());
    }
    sum_q += batch_q;
    sum_p += batch_p;
  }

  if (accepted == 0)
    throw Error(ErrorKind::InsufficientStatistics,
                "no shot passed the accepted Bell outcome and Bob's postselection");

  ProtocolResult result;
  result.analytic_wv = analytic_weak_value(s, p);
  for (int i = 0; i < 4; ++i)
    result.bell_outcome_probs[i] =
        static_cast<double>(counts[i]) / static_cast<double>(shots);
  result.joint_success_prob =
      static_cast<double>(accepted) / static_cast<double>(shots);
  result.shots_used = shots;

  const double mean_q = sum_q / static_cast<double>(accepted);
  const double mean_p = sum_p / static_cast<double>(accepted);
  result.pointer_mean_q = mean_q;
  result.pointer_mean_p = mean_p;
  if (s.g > 0.0) {
    result.pointer_estimate = {mean_q / s.g, 2.0 * sigma * sigma * mean_p / s.g};
    result.estimate_valid = true;
  }
  result.transcript = make_transcript(p, "sampled shots=" + std::to_string(shots));
  return result;
}

} // namespace wvlab
