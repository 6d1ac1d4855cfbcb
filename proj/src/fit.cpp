#include "sdegp/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "sdegp/errors.hpp"
#include "sdegp/parallel.hpp"

namespace sdegp {

int heuristic_m(const Eigen::VectorXd& x, double length_scale) {
  if (x.size() == 0) throw UsageError("heuristic_m: empty sample vector");
  if (!(length_scale > 0.0) || !std::isfinite(length_scale))
    throw ConfigError("heuristic_m: length-scale must be positive");
  const double range = x.maxCoeff() - x.minCoeff();
  const int m = static_cast<int>(std::floor(range / length_scale));
  return std::max(2, m);
}

Eigen::VectorXd init_pseudo_inputs(const Eigen::VectorXd& x, int m,
                                   double noise_frac, Rng& rng) {
  if (x.size() == 0) throw UsageError("init_pseudo_inputs: empty sample vector");
  if (m < 1) throw ConfigError("init_pseudo_inputs: m must be at least 1");
  if (!(noise_frac >= 0.0) || !std::isfinite(noise_frac))
    throw ConfigError("init_pseudo_inputs: noise fraction must be nonnegative");

  Eigen::VectorXd sorted = x;
  std::sort(sorted.data(), sorted.data() + sorted.size());
  Eigen::Index distinct = 1;
  for (Eigen::Index i = 1; i < sorted.size(); ++i)
    if (sorted[i] != sorted[i - 1]) ++distinct;
  if (m > distinct)
    throw ConfigError("init_pseudo_inputs: m = " + std::to_string(m) +
                      " exceeds the " + std::to_string(distinct) +
                      " distinct sample values");

  const double lo = sorted[0];
  const double hi = sorted[sorted.size() - 1];
  const double range = hi - lo;

  Eigen::VectorXd xm(m);
  if (m == 1) {
    xm[0] = sorted_quantile(sorted, 0.5);
  } else {
    for (int k = 0; k < m; ++k)
      xm[k] = sorted_quantile(sorted, static_cast<double>(k) / (m - 1));
  }
  if (noise_frac > 0.0 && range > 0.0)
    for (int k = 0; k < m; ++k) xm[k] += noise_frac * range * rng.uniform(-1.0, 1.0);

  std::sort(xm.data(), xm.data() + m);
  xm = xm.cwiseMax(lo).cwiseMin(hi);

  // strictly increasing, still inside [lo, hi]
  const double eps = (range > 0.0 ? range : 1.0) * 1e-9;
  for (int k = 1; k < m; ++k)
    if (xm[k] <= xm[k - 1]) xm[k] = xm[k - 1] + eps;
  for (int k = m - 1; k >= 0; --k) {
    const double cap = hi - eps * (m - 1 - k);
    if (xm[k] > cap) xm[k] = cap;
  }
  return xm;
}

DiffusionPrior init_diffusion_prior(const Dataset& data, double amplitude_g) {
  if (!(amplitude_g >= 0.0) || !std::isfinite(amplitude_g))
    throw ConfigError("init_diffusion_prior: amplitude_g must be nonnegative");
  const Eigen::Index n = data.n();
  const double mean = data.increments.mean();
  const double var =
      (data.increments.array() - mean).square().sum() / static_cast<double>(n - 1);
  if (!(var > 0.0))
    throw ConfigError(
        "init_diffusion_prior: increments have zero variance (constant series)");
  const double scale = var / data.dt;  // empirical E[g]
  const double a_s = std::log1p(amplitude_g / (scale * scale));
  return {std::log(scale) - 0.5 * a_s, a_s};
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct ParamLayout {
  Eigen::Index nf = 0, ns = 0, m = 0;
  Eigen::Index size() const { return nf + ns + 1 + m; }

  Eigen::VectorXd pack(const SgpState& st) const {
    Eigen::VectorXd p(size());
    p.head(nf) = st.kernel_f.theta;
    p.segment(nf, ns) = st.kernel_s.theta;
    p[nf + ns] = st.v;
    p.tail(m) = st.pseudo_inputs;
    return p;
  }

  void unpack(const Eigen::VectorXd& p, SgpState& st) const {
    st.kernel_f.theta = p.head(nf);
    st.kernel_s.theta = p.segment(nf, ns);
    st.v = p[nf + ns];
    st.pseudo_inputs = p.tail(m);
  }
};

// Sorts pseudo-inputs and applies the same permutation to the inducing-point
// moments; L is invariant under this relabelling.
void sort_state_with_moments(SgpState& st) {
  const Eigen::Index m = st.m();
  std::vector<Eigen::Index> idx(m);
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return st.pseudo_inputs[a] < st.pseudo_inputs[b];
  });
  bool identity = true;
  for (Eigen::Index k = 0; k < m; ++k)
    if (idx[k] != k) identity = false;
  if (identity) return;

  Eigen::VectorXd xm(m), mu_f(m), mu_s(m);
  Eigen::MatrixXd f(m, m), s(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    xm[k] = st.pseudo_inputs[idx[k]];
    mu_f[k] = st.mu_f[idx[k]];
    mu_s[k] = st.mu_s[idx[k]];
    for (Eigen::Index l = 0; l < m; ++l) {
      f(k, l) = st.F(idx[k], idx[l]);
      s(k, l) = st.S(idx[k], idx[l]);
    }
  }
  st.pseudo_inputs = std::move(xm);
  st.mu_f = std::move(mu_f);
  st.mu_s = std::move(mu_s);
  st.F = std::move(f);
  st.S = std::move(s);
}

// Evaluates L at candidate hyperparameters with the variational moments
// frozen: rebuild projections, refresh zeta/psi (they depend on the candidate
// through the conditionals), then the bound. Infeasible candidates yield -inf
// so the line search backs off.
class MStepPipeline {
public:
  MStepPipeline(const Dataset& data, const SgpState& base,
                const ParamLayout& layout)
      : data_(data), base_(base), layout_(layout) {}

  double eval(const Eigen::VectorXd& p, SgpState* committed,
              OverflowCounter* overflow) {
    SgpState st;
    st.kernel_f = base_.kernel_f;
    st.kernel_s = base_.kernel_s;
    st.mu_f = base_.mu_f;
    st.F = base_.F;
    st.mu_s = base_.mu_s;
    st.S = base_.S;
    layout_.unpack(p, st);
    sort_state_with_moments(st);
    try {
      build_projections(data_, st);
      OverflowCounter scratch;
      const EStepStats stats =
          refresh_stats(data_, st, overflow ? overflow : &scratch);
      const double l = lower_bound(data_, st, stats.zeta, stats.psi);
      if (committed) *committed = std::move(st);
      return l;
    } catch (const Error&) {
      return kNegInf;
    }
  }

private:
  const Dataset& data_;
  const SgpState& base_;
  ParamLayout layout_;
};

// Central differences with evaluation points clipped into the box and the
// denominator adjusted accordingly. Failed evaluations flatten the component
// rather than aborting the whole M step.
Eigen::VectorXd mstep_gradient(MStepPipeline& pipe, const Eigen::VectorXd& p,
                               const Eigen::VectorXd& lo,
                               const Eigen::VectorXd& hi,
                               const Eigen::VectorXd& steps) {
  Eigen::VectorXd g = Eigen::VectorXd::Zero(p.size());
  Eigen::VectorXd pt = p;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    const double a = std::min(p[j] + steps[j], hi[j]);
    const double b = std::max(p[j] - steps[j], lo[j]);
    if (!(a > b)) continue;
    pt[j] = a;
    const double fa = -pipe.eval(pt, nullptr, nullptr);
    pt[j] = b;
    const double fb = -pipe.eval(pt, nullptr, nullptr);
    pt[j] = p[j];
    if (std::isfinite(fa) && std::isfinite(fb)) g[j] = (fa - fb) / (a - b);
  }
  return g;
}

struct MStepBounds {
  Eigen::VectorXd lower, upper, steps;
};

MStepBounds mstep_bounds(const SgpState& st, const Dataset& data,
                         const HyperBounds& bf, const HyperBounds& bs,
                         const ParamLayout& layout) {
  MStepBounds b;
  b.lower.resize(layout.size());
  b.upper.resize(layout.size());
  b.steps.resize(layout.size());
  b.lower << bf.lower, bs.lower, kNegInf, Eigen::VectorXd::Constant(layout.m, data.min());
  b.upper << bf.upper, bs.upper, -kNegInf, Eigen::VectorXd::Constant(layout.m, data.max());

  const Eigen::VectorXd p = layout.pack(st);
  const double range = data.range();
  for (Eigen::Index j = 0; j < layout.size(); ++j) {
    double scale;
    if (j < layout.nf + layout.ns)
      scale = 0.01 * (b.upper[j] - b.lower[j]);
    else if (j == layout.nf + layout.ns)
      scale = 1.0;  // v
    else
      scale = 0.01 * range;
    b.steps[j] = 1e-5 * std::max(std::abs(p[j]), scale);
  }
  return b;
}

struct RestartOutcome {
  bool ok = false;
  std::string error;
  SgpState state;
  double l = kNegInf;
  double l_mod = kNegInf;
  std::vector<double> trace;
  bool converged = false;
  long overflows = 0;
  int diffusion_nonconverged = 0;
  int rejected_m_steps = 0;
};

KernelSpec random_kernel(KernelFamily family, double amplitude, double jitter,
                         double l_min, double l_max, double alpha_min,
                         double alpha_max, Rng& rng) {
  Eigen::VectorXd th(theta_size(family));
  switch (family) {
    case KernelFamily::SquaredExpPlusConst: {
      th[0] = rng.uniform(0.0, amplitude);
      const double l = rng.uniform(l_min, l_max);
      th[1] = 1.0 / (l * l);
      break;
    }
    case KernelFamily::SumOfTwoSquaredExp: {
      th[0] = rng.uniform(0.0, amplitude);
      const double l1 = rng.uniform(l_min, l_max);
      const double l2 = rng.uniform(l_min, l_max);
      th[1] = 1.0 / (l1 * l1);
      th[2] = 1.0 / (l2 * l2);
      break;
    }
    case KernelFamily::RationalQuadratic: {
      th[0] = rng.uniform(alpha_min, alpha_max);
      th[1] = rng.uniform(l_min, l_max);
      break;
    }
  }
  return make_kernel(family, std::move(th), amplitude, jitter);
}

// One capped quasi-Newton pass over (theta_f, theta_s, v, x_m) on -L.
// A pass whose recomputed L drops below the current one is reverted and
// retried with half the iteration cap.
double m_step(const Dataset& data, SgpState& st, double l_current,
              const FitConfig& cfg, const HyperBounds& bf,
              const HyperBounds& bs, OverflowCounter* overflow,
              RestartOutcome& out) {
  ParamLayout layout{st.kernel_f.theta.size(), st.kernel_s.theta.size(), st.m()};
  const Eigen::VectorXd p0 = layout.pack(st);
  const MStepBounds box = mstep_bounds(st, data, bf, bs, layout);

  int cap = cfg.m_step_inner_iterations;
  while (cap >= 1) {
    MStepPipeline pipe(data, st, layout);
    BoundedProblem problem;
    problem.lower = box.lower;
    problem.upper = box.upper;
    problem.max_iterations = cap;
    problem.objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd* grad) {
      const double value = -pipe.eval(p, nullptr, nullptr);
      if (grad) *grad = mstep_gradient(pipe, p, box.lower, box.upper, box.steps);
      return value;
    };

    MinimizeResult res;
    try {
      res = minimize_bounded(problem, p0);
    } catch (const NumericalError&) {
      ++out.rejected_m_steps;
      cap /= 2;
      continue;
    }
    if ((res.argmin - p0).lpNorm<Eigen::Infinity>() == 0.0) return l_current;

    SgpState candidate;
    OverflowCounter candidate_overflow;
    const double l_new = pipe.eval(res.argmin, &candidate, &candidate_overflow);
    if (std::isfinite(l_new) &&
        l_new >= l_current - 1e-12 * std::max(1.0, std::abs(l_current))) {
      st = std::move(candidate);
      if (overflow) overflow->clamped += candidate_overflow.clamped;
      return l_new;
    }
    ++out.rejected_m_steps;
    cap /= 2;
  }
  return l_current;
}

RestartOutcome run_restart(const Dataset& data, const FitConfig& cfg, int m,
                           const DiffusionPrior& prior, double lf_min,
                           double lf_max, double ls_min, double ls_max,
                           int restart_index) {
  RestartOutcome out;
  try {
    Rng rng = Rng(cfg.seed).split(static_cast<std::uint64_t>(restart_index) + 1);

    SgpState st;
    const double noise = cfg.pseudo_input_noise >= 0.0
                             ? cfg.pseudo_input_noise
                             : (m > 1 ? 0.25 / (m - 1) : 0.0);
    st.pseudo_inputs = init_pseudo_inputs(data.samples, m, noise, rng);
    st.v = prior.v;

    const double jitter_f =
        cfg.jitter_f >= 0.0 ? cfg.jitter_f : default_jitter(cfg.amplitude_f);
    const double jitter_s =
        cfg.jitter_s >= 0.0 ? cfg.jitter_s : default_jitter(prior.amplitude);
    st.kernel_f = random_kernel(cfg.kernel_f, cfg.amplitude_f, jitter_f, lf_min,
                                lf_max, cfg.rq_alpha_min, cfg.rq_alpha_max, rng);
    st.kernel_s = random_kernel(cfg.kernel_s, prior.amplitude, jitter_s, ls_min,
                                ls_max, cfg.rq_alpha_min, cfg.rq_alpha_max, rng);

    build_projections(data, st);
    st.mu_f = Eigen::VectorXd::Zero(m);
    st.F = cov_matrix(st.kernel_f, st.pseudo_inputs, st.pseudo_inputs, true);
    st.mu_s = Eigen::VectorXd::Constant(m, st.v);
    st.S = cov_matrix(st.kernel_s, st.pseudo_inputs, st.pseudo_inputs, true);

    const HyperBounds bf = bounds_from_length_scales(
        st.kernel_f, lf_min, lf_max, cfg.rq_alpha_min, cfg.rq_alpha_max);
    const HyperBounds bs = bounds_from_length_scales(
        st.kernel_s, ls_min, ls_max, cfg.rq_alpha_min, cfg.rq_alpha_max);

    OverflowCounter overflow;
    double l_prev = 0.0;
    for (int iter = 0; iter < cfg.max_em_iterations; ++iter) {
      Eigen::VectorXd zeta = compute_zeta(st, &overflow);
      update_drift(data, st, zeta);
      const Eigen::VectorXd psi = compute_psi(data, st);
      const DiffusionUpdate du = update_diffusion(data, st, psi, 200, &overflow);
      if (!du.converged) ++out.diffusion_nonconverged;

      const EStepStats stats = refresh_stats(data, st, &overflow);
      double l = lower_bound(data, st, stats.zeta, stats.psi);
      if (cfg.m_step_inner_iterations > 0)
        l = m_step(data, st, l, cfg, bf, bs, &overflow, out);

      out.trace.push_back(l);
      if (iter > 0 && std::abs(l - l_prev) <= cfg.em_tolerance * std::abs(l)) {
        out.converged = true;
        break;
      }
      l_prev = l;
    }

    out.state = std::move(st);
    out.l = out.trace.back();
    out.l_mod = modified_lower_bound(out.l, m);
    out.overflows = overflow.clamped;
    if (overflow.clamped > 0) {
      out.ok = false;
      out.error = "restart " + std::to_string(restart_index) + ": " +
                  std::to_string(overflow.clamped) +
                  " exp overflow clamps in committed states";
    } else {
      out.ok = true;
    }
  } catch (const Error& e) {
    out.ok = false;
    out.error = "restart " + std::to_string(restart_index) + ": " + e.code() +
                ": " + e.what();
  }
  return out;
}

void validate_config(const FitConfig& cfg) {
  if (cfg.m <= 0 && !(cfg.heuristic_length_scale > 0.0))
    throw ConfigError("fit: heuristic length-scale must be positive when m is automatic");
  if (cfg.restarts < 1) throw ConfigError("fit: restarts must be at least 1");
  if (cfg.max_em_iterations < 1)
    throw ConfigError("fit: max_em_iterations must be at least 1");
  if (cfg.m_step_inner_iterations < 0)
    throw ConfigError("fit: m_step_inner_iterations must be nonnegative");
  if (!(cfg.em_tolerance > 0.0) || !std::isfinite(cfg.em_tolerance))
    throw ConfigError("fit: em_tolerance must be positive");
  if (!(cfg.amplitude_f > 0.0) || !std::isfinite(cfg.amplitude_f))
    throw ConfigError("fit: amplitude_f must be positive");
  if (!(cfg.amplitude_g > 0.0) || !std::isfinite(cfg.amplitude_g))
    throw ConfigError("fit: amplitude_g must be positive");
  if (cfg.threads < 0) throw ConfigError("fit: threads must be nonnegative");
  const bool min_f = cfg.length_scale_min_f > 0.0, max_f = cfg.length_scale_max_f > 0.0;
  if (min_f != max_f)
    throw ConfigError("fit: length_scale_min_f and length_scale_max_f must be set together");
  if (min_f && !(cfg.length_scale_min_f <= cfg.length_scale_max_f))
    throw ConfigError("fit: length_scale_min_f must not exceed length_scale_max_f");
  const bool min_s = cfg.length_scale_min_s > 0.0, max_s = cfg.length_scale_max_s > 0.0;
  if (min_s != max_s)
    throw ConfigError("fit: length_scale_min_s and length_scale_max_s must be set together");
  if (min_s && !(cfg.length_scale_min_s <= cfg.length_scale_max_s))
    throw ConfigError("fit: length_scale_min_s must not exceed length_scale_max_s");
  if (!(cfg.rq_alpha_min > 0.0) || !(cfg.rq_alpha_max >= cfg.rq_alpha_min))
    throw ConfigError("fit: rq alpha bounds must satisfy 0 < min <= max");
}

}  // namespace

FitResult fit(const Dataset& data, const FitConfig& config) {
  validate_config(config);

  const int m = config.m > 0
                    ? config.m
                    : heuristic_m(data.samples, config.heuristic_length_scale);
  {
    // surface an impossible m before spawning restarts
    Eigen::VectorXd sorted = data.samples;
    std::sort(sorted.data(), sorted.data() + sorted.size());
    Eigen::Index distinct = 1;
    for (Eigen::Index i = 1; i < sorted.size(); ++i)
      if (sorted[i] != sorted[i - 1]) ++distinct;
    if (m > distinct)
      throw ConfigError("fit: m = " + std::to_string(m) + " exceeds the " +
                        std::to_string(distinct) + " distinct sample values");
  }

  const DiffusionPrior prior = init_diffusion_prior(data, config.amplitude_g);
  const double range = data.range();
  const double lf_min = config.length_scale_min_f > 0.0 ? config.length_scale_min_f
                                                        : 0.05 * range;
  const double lf_max = config.length_scale_max_f > 0.0 ? config.length_scale_max_f
                                                        : 2.0 * range;
  const double ls_min = config.length_scale_min_s > 0.0 ? config.length_scale_min_s
                                                        : 0.05 * range;
  const double ls_max = config.length_scale_max_s > 0.0 ? config.length_scale_max_s
                                                        : 2.0 * range;

  std::vector<RestartOutcome> outcomes(config.restarts);
  parallel_for(config.restarts, resolve_threads(config.threads), [&](int r) {
    outcomes[r] =
        run_restart(data, config, m, prior, lf_min, lf_max, ls_min, ls_max, r);
  });

  int best = -1;
  for (int r = 0; r < config.restarts; ++r)
    if (outcomes[r].ok && (best < 0 || outcomes[r].l_mod > outcomes[best].l_mod))
      best = r;

  FitResult result;
  result.config = config;
  for (int r = 0; r < config.restarts; ++r) {
    result.diagnostics.exp_overflows += outcomes[r].overflows;
    result.diagnostics.diffusion_nonconverged += outcomes[r].diffusion_nonconverged;
    result.diagnostics.rejected_m_steps += outcomes[r].rejected_m_steps;
    if (!outcomes[r].ok) {
      ++result.diagnostics.failed_restarts;
      result.diagnostics.restart_errors.push_back(outcomes[r].error);
    }
  }
  if (best < 0) {
    std::string msg = "fit: all restarts failed";
    for (const auto& e : result.diagnostics.restart_errors) msg += "; " + e;
    throw FitError(msg);
  }

  RestartOutcome& chosen = outcomes[best];
  result.state = std::move(chosen.state);
  result.lower_bound_value = chosen.l;
  result.modified_lower_bound_value = chosen.l_mod;
  result.elbo_trace = std::move(chosen.trace);
  result.converged = chosen.converged;
  result.em_iterations = static_cast<int>(result.elbo_trace.size());
  result.best_restart = best;
  result.dataset_fingerprint = data.fingerprint();
  result.data_min = data.min();
  result.data_max = data.max();
  return result;
}

}  // namespace sdegp
