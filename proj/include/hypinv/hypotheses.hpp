#pragma once

// Finite surrogates for the hypotheses on T = M_f + K and the curve:
// separation of two essential-spectrum points, a null preimage of the curve,
// range membership of u_n / v_n, compactness and continuity of z -> A(z),
// invertibility of I + A(z)(M_f - z) at every node, summability of the
// coefficient arrays, and the choice of x0 for the rectangle contour.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hypinv/contour.hpp"
#include "hypinv/errors.hpp"
#include "hypinv/numkernel.hpp"
#include "hypinv/operator_model.hpp"
#include "hypinv/random.hpp"
#include "hypinv/resolvent.hpp"

namespace hypinv {

/// Greedy clustering: repeatedly take the densest eps-neighbourhood (centred
/// on an atom, first atom wins ties), emit its weighted centroid, and remove
/// its members, while the neighbourhood mass reaches min_mass.
inline std::vector<Complex> accumulation_points(const MultiplicationOperator& m, double eps,
                                                double min_mass) {
  if (!(eps > 0.0)) throw InvalidArgument("accumulation_points: eps must be positive");
  const std::size_t n = m.atom_count();
  const MeasureSpace& space = m.space();
  std::vector<bool> alive(n, true);
  std::vector<Complex> out;
  while (true) {
    double best_mass = -1.0;
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      double mass = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (alive[j] && std::abs(m.value(j) - m.value(i)) <= eps) mass += space.mass(j);
      }
      if (mass > best_mass) {
        best_mass = mass;
        best = i;
      }
    }
    if (best == n || best_mass < min_mass) break;
    Complex centroid{0.0, 0.0};
    double total = 0.0;
    const Complex centre = m.value(best);
    for (std::size_t j = 0; j < n; ++j) {
      if (alive[j] && std::abs(m.value(j) - centre) <= eps) {
        centroid += space.weight(j) * m.value(j);
        total += space.weight(j);
        alive[j] = false;
      }
    }
    out.push_back(centroid / total);
  }
  return out;
}

inline double default_cluster_eps(const MultiplicationOperator& m) {
  return 0.1 * std::max(1.0, m.sup_norm());
}

inline double default_cluster_min_mass(const MeasureSpace& space, double eps) {
  return space.kind() == MeasureKind::atomic ? 1.0 : 0.25 * std::numbers::pi * eps * eps;
}

/// a inside the curve and b outside.
inline bool check_separation(const Contour& g, Complex a, Complex b) {
  return contains(g, a) && !contains(g, b);
}

struct MeasureZeroResult {
  bool pass = false;
  double min_distance = 0.0;
  std::size_t nearest_atom = 0;
  double tube_weight = 0.0;  // total weight of atoms closer than delta
};

inline MeasureZeroResult check_measure_zero(const MultiplicationOperator& m, const Contour& g,
                                            double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("check_measure_zero: delta must be positive");
  MeasureZeroResult out;
  out.min_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m.atom_count(); ++i) {
    const double d = distance_to(g, m.value(i));
    if (d < out.min_distance) {
      out.min_distance = d;
      out.nearest_atom = i;
    }
    if (d < delta) out.tube_weight += m.space().weight(i);
  }
  out.pass = out.min_distance >= delta;
  return out;
}

struct SummabilityResult {
  double sum1 = 0.0;  // sum_n sum_k |a_n <u_n, e_k>|
  double sum2 = 0.0;  // sum_n sum_j |b_n <e_j, v_n>|
  double tail_share1 = 0.0;  // share of sum1 contributed by the last quartile of atoms
  double tail_share2 = 0.0;
  bool plateau = false;
  bool pass = false;
};

inline constexpr double kDefaultSummabilityCap = 1e6;
inline constexpr double kDefaultPlateauTol = 1e-6;

namespace detail {
// Relative increase of the partial sums over atoms k in [ceil(3N/4), N).
inline double last_quartile_share(const ComplexMatrix& c) {
  const Eigen::Index n = c.cols();
  const double total = c.cwiseAbs().sum();
  if (total == 0.0 || n == 0) return 0.0;
  const Eigen::Index start = (3 * n + 3) / 4;
  return c.rightCols(n - start).cwiseAbs().sum() / total;
}
}  // namespace detail

inline SummabilityResult check_summability(const PerturbedOperator& t, const FactoredCoefficients& coeffs,
                                           double cap = kDefaultSummabilityCap,
                                           double plateau_tol = kDefaultPlateauTol) {
  if (t.space().kind() != MeasureKind::atomic) {
    throw InvalidArgument("check_summability: needs a purely atomic space");
  }
  const ComplexMatrix alpha = alpha_matrix(t, coeffs);
  const ComplexMatrix beta = beta_matrix(t, coeffs);
  SummabilityResult out;
  out.sum1 = alpha.cwiseAbs().sum();
  out.sum2 = beta.cwiseAbs().sum();
  out.tail_share1 = detail::last_quartile_share(alpha);
  out.tail_share2 = detail::last_quartile_share(beta);
  out.plateau = out.tail_share1 < plateau_tol && out.tail_share2 < plateau_tol;
  out.pass = out.sum1 <= cap && out.sum2 <= cap && out.plateau;
  return out;
}

/// G(x) = sum |alpha_{n,k}|^2 / |Re f_k - x|^2 + sum |beta_{n,j}|^2 / |Re f_j - x|^2.
inline double x0_objective(const ComplexMatrix& alpha, const ComplexMatrix& beta,
                           const ComplexVector& f, double x) {
  double acc = 0.0;
  for (Eigen::Index k = 0; k < f.size(); ++k) {
    const double gap = f(k).real() - x;
    const double num = (alpha.rows() ? alpha.col(k).squaredNorm() : 0.0) +
                       (beta.rows() ? beta.col(k).squaredNorm() : 0.0);
    if (num != 0.0) acc += num / (gap * gap);
  }
  return acc;
}

struct X0Choice {
  double x0 = 0.0;
  double objective = 0.0;
  std::size_t candidates = 0;
  std::size_t rejected = 0;
};

/// Admissible argmin of G over the given candidates (first wins ties). A
/// candidate within `guard` of some Re f_k is rejected.
inline X0Choice choose_x0(const PerturbedOperator& t, const FactoredCoefficients& coeffs,
                          const std::vector<double>& candidates, double guard) {
  const ComplexMatrix alpha = alpha_matrix(t, coeffs);
  const ComplexMatrix beta = beta_matrix(t, coeffs);
  const ComplexVector& f = t.symbol();
  X0Choice out;
  out.candidates = candidates.size();
  bool found = false;
  for (double x : candidates) {
    bool admissible = std::isfinite(x);
    for (Eigen::Index k = 0; admissible && k < f.size(); ++k) {
      if (std::abs(f(k).real() - x) < guard) admissible = false;
    }
    if (!admissible) {
      ++out.rejected;
      continue;
    }
    const double g = x0_objective(alpha, beta, f, x);
    if (!found || g < out.objective) {
      out.x0 = x;
      out.objective = g;
      found = true;
    }
  }
  if (!found) {
    throw NoAdmissibleX0("choose_x0: all " + std::to_string(candidates.size()) +
                         " candidates lie within the guard of some Re f_k");
  }
  return out;
}

/// Candidates on a uniform grid of `count` cells over (lo, hi), each moved by
/// a seeded jitter of at most a quarter cell.
inline std::vector<double> x0_candidates(double lo, double hi, std::size_t count, std::uint64_t seed) {
  if (!(lo < hi)) throw InvalidArgument("x0_candidates: empty interval");
  if (count == 0) throw InvalidArgument("x0_candidates: need at least one candidate");
  Rng rng(seed);
  std::vector<double> out(count);
  const double h = (hi - lo) / static_cast<double>(count);
  for (std::size_t j = 0; j < count; ++j) {
    out[j] = lo + h * (static_cast<double>(j) + 0.5 + 0.5 * (rng.uniform() - 0.5));
  }
  return out;
}

inline X0Choice choose_x0(const PerturbedOperator& t, const FactoredCoefficients& coeffs, double lo,
                          double hi, std::size_t count, double guard, std::uint64_t seed) {
  return choose_x0(t, coeffs, x0_candidates(lo, hi, count, seed), guard);
}

/// 2 delta sum |alpha_{n,k}|: Lebesgue bound on the union of the intervals
/// of half-width delta |alpha_{n,k}|.
inline double bad_set_bound(const ComplexMatrix& alpha, double delta) {
  if (!(delta > 0.0)) throw InvalidArgument("bad_set_bound: delta must be positive");
  return 2.0 * delta * alpha.cwiseAbs().sum();
}

struct HypothesisEntry {
  std::string name;
  bool pass = false;
  std::vector<std::pair<std::string, double>> witnesses;
  std::string note;

  double witness(const std::string& key) const {
    for (const auto& [k, v] : witnesses) {
      if (k == key) return v;
    }
    throw InvalidArgument("HypothesisEntry '" + name + "': no witness '" + key + "'");
  }
};

struct HypothesisReport {
  std::vector<HypothesisEntry> entries;

  bool all_pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.pass; });
  }
  const HypothesisEntry& at(const std::string& name) const {
    for (const auto& e : entries) {
      if (e.name == name) return e;
    }
    throw InvalidArgument("HypothesisReport: no entry '" + name + "'");
  }
  bool has(const std::string& name) const {
    return std::any_of(entries.begin(), entries.end(), [&](const auto& e) { return e.name == name; });
  }
};

struct HypothesisSettings {
  double cluster_eps = 0.0;       // 0: default_cluster_eps
  double cluster_min_mass = 0.0;  // 0: default_cluster_min_mass
  double delta = 1e-6;
  ResolventSettings resolvent;
  std::size_t nodes_per_segment = kDefaultNodesPerSegment;
  bool require_summability = false;
  double summability_cap = kDefaultSummabilityCap;
  double plateau_tol = kDefaultPlateauTol;
};

namespace detail {

// ||A(z)|| on L^2(mu) from its factors A = F H^H.
struct AFactorsWeighted {
  ComplexMatrix left;   // W^{1/2} F
  ComplexMatrix right;  // W^{-1/2} H
};

inline AFactorsWeighted weighted_a_factors(const PerturbedOperator& t, Complex z,
                                           double range_guard) {
  const AFactors fac = a_factors(t, z, range_guard);
  const RealVector w = t.space().weight_vector();
  const RealVector sw = w.cwiseSqrt();
  AFactorsWeighted out;
  out.left = sw.cast<Complex>().asDiagonal() * (fac.x * fac.s.cast<Complex>().asDiagonal());
  out.right = sw.cast<Complex>().asDiagonal() * fac.y;  // W^{-1/2} (W Y)
  return out;
}

struct ContinuitySample {
  double sup_norm = 0.0;
  double lipschitz = 0.0;  // max_j ||A(z_{j+1}) - A(z_j)|| / |z_{j+1} - z_j|
};

inline ContinuitySample sample_continuity(const PerturbedOperator& t, const QuadratureRule& rule,
                                          double range_guard) {
  ContinuitySample out;
  if (t.term_count() == 0 || rule.size() == 0) return out;
  std::vector<AFactorsWeighted> facs;
  facs.reserve(rule.size());
  for (std::size_t j = 0; j < rule.size(); ++j) {
    facs.push_back(weighted_a_factors(t, rule.nodes[j], range_guard));
    out.sup_norm = std::max(out.sup_norm, low_rank_norm(facs.back().left, facs.back().right));
  }
  for (std::size_t j = 0; j < rule.size(); ++j) {
    const std::size_t k = (j + 1) % rule.size();
    const double dz = std::abs(rule.nodes[k] - rule.nodes[j]);
    if (dz == 0.0) continue;  // shared corner between segments
    const auto r = facs[j].left.cols();
    ComplexMatrix left(facs[j].left.rows(), 2 * r), right(facs[j].right.rows(), 2 * r);
    left << facs[k].left, -facs[j].left;
    right << facs[k].right, facs[j].right;
    out.lipschitz = std::max(out.lipschitz, low_rank_norm(left, right) / dz);
  }
  return out;
}

}  // namespace detail

inline HypothesisEntry separation_entry(const MultiplicationOperator& m, const Contour& g,
                                        const HypothesisSettings& settings) {
  HypothesisEntry e{"separation", false, {}, ""};
  const double eps = settings.cluster_eps > 0.0 ? settings.cluster_eps : default_cluster_eps(m);
  const double min_mass = settings.cluster_min_mass > 0.0
                              ? settings.cluster_min_mass
                              : default_cluster_min_mass(m.space(), eps);
  const std::vector<Complex> clusters = accumulation_points(m, eps, min_mass);
  std::optional<Complex> a, b;
  for (const Complex c : clusters) {
    if (distance_to(g, c) < kOnCurveRelative * g.scale()) continue;
    if (contains(g, c)) {
      if (!a) a = c;
    } else if (!b) {
      b = c;
    }
  }
  e.witnesses = {{"cluster_eps", eps}, {"cluster_min_mass", min_mass},
                 {"cluster_count", static_cast<double>(clusters.size())}};
  if (a) {
    e.witnesses.emplace_back("a_re", a->real());
    e.witnesses.emplace_back("a_im", a->imag());
  }
  if (b) {
    e.witnesses.emplace_back("b_re", b->real());
    e.witnesses.emplace_back("b_im", b->imag());
  }
  e.pass = a.has_value() && b.has_value() && check_separation(g, *a, *b);
  if (!e.pass) e.note = a ? "no cluster outside the contour" : "no cluster inside the contour";
  return e;
}

/// Runs every check; failures are recorded, never thrown.
inline HypothesisReport full_hypothesis_report(const PerturbedOperator& t, const Contour& g,
                                               const FactoredCoefficients& coeffs,
                                               const HypothesisSettings& settings = {}) {
  HypothesisReport report;
  report.entries.push_back(separation_entry(t.base(), g, settings));

  {
    const MeasureZeroResult mz = check_measure_zero(t.base(), g, settings.delta);
    HypothesisEntry e{"measure_zero", mz.pass, {}, ""};
    e.witnesses = {{"delta", settings.delta},
                   {"min_distance", mz.min_distance},
                   {"nearest_atom", static_cast<double>(mz.nearest_atom)},
                   {"tube_weight", mz.tube_weight}};
    if (!mz.pass) e.note = "atom " + std::to_string(mz.nearest_atom) + " lies within delta of the contour";
    report.entries.push_back(std::move(e));
  }

  const QuadratureRule rule = quadrature(g, settings.nodes_per_segment);
  bool range_ok = true;
  {
    HypothesisEntry e{"range_membership", true, {}, ""};
    std::size_t failures = 0;
    std::optional<std::size_t> first_node;
    double min_gap = std::numeric_limits<double>::infinity();
    const double scale = std::max(t.base().sup_norm(), std::numeric_limits<double>::min());
    for (std::size_t j = 0; j < rule.size(); ++j) {
      try {
        a_factors(t, rule.nodes[j], settings.resolvent.range_guard);
      } catch (const RangeMembership& err) {
        ++failures;
        if (!first_node) {
          first_node = j;
          e.note = "node " + std::to_string(j) + ": " + err.what();
        }
      }
      for (std::size_t n = 0; n < t.term_count(); ++n) {
        const RankOneTerm& term = t.perturbation()[n];
        for (Eigen::Index i = 0; i < term.u.size(); ++i) {
          if (term.u(i) != 0.0 || term.v(i) != 0.0) {
            min_gap = std::min(min_gap, std::abs(t.symbol()(i) - rule.nodes[j]) / scale);
          }
        }
      }
    }
    e.pass = failures == 0;
    range_ok = e.pass;
    e.witnesses = {{"nodes", static_cast<double>(rule.size())},
                   {"failures", static_cast<double>(failures)},
                   {"min_relative_gap", t.term_count() ? min_gap : 1.0},
                   {"range_guard", settings.resolvent.range_guard}};
    if (first_node) e.witnesses.emplace_back("first_failing_node", static_cast<double>(*first_node));
    report.entries.push_back(std::move(e));
  }

  {
    HypothesisEntry e{"compactness_continuity", false, {}, ""};
    if (!range_ok) {
      e.note = "not evaluated: range membership fails";
    } else {
      const auto coarse = detail::sample_continuity(t, rule, settings.resolvent.range_guard);
      const auto fine = detail::sample_continuity(t, quadrature(g, 2 * settings.nodes_per_segment),
                                                  settings.resolvent.range_guard);
      const double sum_s = t.perturbation().sum_s();
      e.pass = std::isfinite(coarse.sup_norm) && std::isfinite(fine.lipschitz) &&
               fine.lipschitz <= 2.0 * coarse.lipschitz + 1e-12 * (1.0 + coarse.lipschitz);
      e.witnesses = {{"sup_norm_A", std::max(coarse.sup_norm, fine.sup_norm)},
                     {"sum_s", sum_s},
                     {"sup_norm_A_le_sum_s", std::max(coarse.sup_norm, fine.sup_norm) <= sum_s * (1.0 + 1e-12) ? 1.0 : 0.0},
                     {"lipschitz_M", coarse.lipschitz},
                     {"lipschitz_2M", fine.lipschitz}};
      if (!e.pass) e.note = "continuity modulus does not stabilize under node doubling";
    }
    report.entries.push_back(std::move(e));
  }

  {
    HypothesisEntry e{"invertibility", false, {}, ""};
    if (!range_ok) {
      e.note = "not evaluated: range membership fails";
    } else {
      double min_sigma = std::numeric_limits<double>::infinity();
      std::size_t min_node = 0, failures = 0;
      std::optional<std::size_t> first_fail;
      ResolventSettings probe = settings.resolvent;
      probe.near_singular = 0.0;  // record sigma_min, judge below
      for (std::size_t j = 0; j < rule.size(); ++j) {
        double sigma = 0.0, norm = 1.0;
        try {
          const ResolventOperatorAt b = build_B(t, rule.nodes[j], probe, false);
          sigma = b.invertibility_sigma_min;
          norm = b.system_norm;
        } catch (const NearSingular& err) {
          sigma = err.sigma_min();
        }
        if (sigma < min_sigma) {
          min_sigma = sigma;
          min_node = j;
        }
        if (!(sigma > settings.resolvent.near_singular * norm)) {
          ++failures;
          if (!first_fail) first_fail = j;
        }
      }
      e.pass = failures == 0;
      e.witnesses = {{"min_sigma", t.term_count() ? min_sigma : 1.0},
                     {"min_sigma_node", static_cast<double>(min_node)},
                     {"near_singular", settings.resolvent.near_singular},
                     {"failures", static_cast<double>(failures)}};
      if (first_fail) {
        e.witnesses.emplace_back("first_failing_node", static_cast<double>(*first_fail));
        e.note = "I + A(z)(M_f - z) is numerically singular at node " + std::to_string(*first_fail);
      }
    }
    report.entries.push_back(std::move(e));
  }

  if (settings.require_summability && t.space().kind() == MeasureKind::atomic) {
    const SummabilityResult s =
        check_summability(t, coeffs, settings.summability_cap, settings.plateau_tol);
    HypothesisEntry e{"summability", s.pass, {}, ""};
    e.witnesses = {{"sum1", s.sum1},
                   {"sum2", s.sum2},
                   {"tail_share1", s.tail_share1},
                   {"tail_share2", s.tail_share2},
                   {"cap", settings.summability_cap},
                   {"plateau_tol", settings.plateau_tol}};
    if (!s.pass) e.note = s.plateau ? "sums exceed the cap" : "partial sums do not plateau";
    report.entries.push_back(std::move(e));
  }
  return report;
}

inline HypothesisEntry x0_entry(const X0Choice& choice) {
  HypothesisEntry e{"x0", std::isfinite(choice.objective), {}, ""};
  e.witnesses = {{"x0", choice.x0},
                 {"objective", choice.objective},
                 {"candidates", static_cast<double>(choice.candidates)},
                 {"rejected", static_cast<double>(choice.rejected)}};
  return e;
}

}  // namespace hypinv
