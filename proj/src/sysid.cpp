#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>

#include "artjoint/error.hpp"
#include "artjoint/sysid.hpp"
#include "json_util.hpp"
#include "scenario_io.hpp"

namespace artjoint {

namespace {

struct ParamName {
  FitParameter param;
  std::string_view name;
};

constexpr ParamName kParamNames[] = {
    {FitParameter::DampingD, "damping_D"},
    {FitParameter::MuS, "mu_s"},
    {FitParameter::CoulombFloor, "coulomb_floor"},
    {FitParameter::EffectiveInertia, "effective_inertia"},
    {FitParameter::StiffnessK, "stiffness.k"},
    {FitParameter::KHigh, "stiffness.k_high"},
    {FitParameter::KLow, "stiffness.k_low"},
    {FitParameter::KMax, "stiffness.k_max"},
    {FitParameter::Alpha, "stiffness.alpha"},
    {FitParameter::Lambda, "stiffness.lambda"},
};

double* parameter_slot(JointSpec& spec, FitParameter p) {
  switch (p) {
    case FitParameter::DampingD: return &spec.damping_D;
    case FitParameter::MuS: return &spec.mu_s;
    case FitParameter::CoulombFloor: return &spec.coulomb_floor;
    case FitParameter::EffectiveInertia: return &spec.effective_inertia;
    case FitParameter::StiffnessK: {
      auto* c = std::get_if<ConstantStiffness>(&spec.stiffness);
      return c ? &c->k : nullptr;
    }
    default: break;
  }
  auto* s = std::get_if<ScheduledStiffness>(&spec.stiffness);
  if (s == nullptr) return nullptr;
  switch (p) {
    case FitParameter::KHigh: return &s->k_high;
    case FitParameter::KLow: return &s->k_low;
    case FitParameter::KMax: return &s->k_max;
    case FitParameter::Alpha: return &s->alpha;
    case FitParameter::Lambda: return &s->lambda;
    default: return nullptr;
  }
}

}  // namespace

std::string_view to_string(FitParameter p) {
  for (const auto& entry : kParamNames)
    if (entry.param == p) return entry.name;
  return "unknown";
}

std::optional<FitParameter> parse_fit_parameter(std::string_view name) {
  for (const auto& entry : kParamNames)
    if (entry.name == name) return entry.param;
  return std::nullopt;
}

double get_parameter(const JointSpec& spec, FitParameter p) {
  JointSpec copy = spec;
  const double* slot = parameter_slot(copy, p);
  if (slot == nullptr)
    throw Error(ErrorCode::InvalidProblem, std::string(to_string(p)), "parameter not present on joint " + spec.id);
  return *slot;
}

void set_parameter(JointSpec& spec, FitParameter p, double value) {
  double* slot = parameter_slot(spec, p);
  if (slot == nullptr)
    throw Error(ErrorCode::InvalidProblem, std::string(to_string(p)), "parameter not present on joint " + spec.id);
  *slot = value;
}

FitProblem::FitProblem(Trajectory observed, std::string channel, std::vector<ForceProfile> forces,
                       JointSpec spec_template, JointState initial, std::vector<FreeParameter> free, double dt)
    : observed_(std::move(observed)),
      channel_(std::move(channel)),
      forces_(std::move(forces)),
      template_(std::move(spec_template)),
      initial_(initial),
      free_(std::move(free)),
      dt_(dt) {
  if (free_.empty()) throw Error(ErrorCode::InvalidProblem, "free", "no free parameters");
  for (std::size_t i = 0; i < free_.size(); ++i) {
    const auto& fp = free_[i];
    const std::string name(to_string(fp.param));
    for (std::size_t j = 0; j < i; ++j)
      if (free_[j].param == fp.param) throw Error(ErrorCode::InvalidProblem, name, "parameter listed twice");
    if (!(fp.lo <= fp.hi)) throw Error(ErrorCode::InvalidProblem, name, "lower bound above upper bound");
    if (!(fp.init >= fp.lo && fp.init <= fp.hi)) throw Error(ErrorCode::InvalidProblem, name, "init outside bounds");
    get_parameter(template_, fp.param);
  }
  if (!(dt_ > 0.0)) throw Error(ErrorCode::NonPositiveDt, "dt", "dt must be positive");
  if (dt_ > kMaxTimestep) throw Error(ErrorCode::TimestepTooLarge, "dt", "dt must not exceed 0.01 s");
  for (std::size_t i = 0; i < forces_.size(); ++i) check_profile(forces_[i], "forces/" + std::to_string(i));
  if (observed_.channel_index(channel_) == std::string::npos)
    throw Error(ErrorCode::InvalidProblem, channel_, "observed trajectory lacks the channel");
  if (observed_.size() < kMinObservedSamples)
    throw Error(ErrorCode::InsufficientData, channel_,
                std::to_string(observed_.size()) + " samples, need at least " + std::to_string(kMinObservedSamples));
  if (observed_.t.front() < 0.0 || !(observed_.t.back() > 0.0))
    throw Error(ErrorCode::InsufficientData, channel_, "observed samples must span positive time from t >= 0");
}

JointSpec FitProblem::spec_with(std::span<const double> values) const {
  if (values.size() != free_.size())
    throw Error(ErrorCode::InvalidProblem, "", "candidate has " + std::to_string(values.size()) + " values");
  JointSpec spec = template_;
  for (std::size_t i = 0; i < free_.size(); ++i) set_parameter(spec, free_[i].param, values[i]);
  return spec;
}

std::vector<double> FitProblem::init_values() const {
  std::vector<double> out;
  for (const auto& fp : free_) out.push_back(fp.init);
  return out;
}

double total_force(std::span<const ForceProfile> forces, double t) {
  double f = 0.0;
  for (const auto& p : forces) f += force_at(p, t);
  return f;
}

double objective(const FitProblem& problem, std::span<const double> candidate) {
  const auto& free = problem.free();
  if (candidate.size() != free.size()) throw Error(ErrorCode::InvalidProblem, "", "candidate size mismatch");
  for (std::size_t i = 0; i < free.size(); ++i)
    if (!(candidate[i] >= free[i].lo && candidate[i] <= free[i].hi))
      throw Error(ErrorCode::InvalidProblem, std::string(to_string(free[i].param)), "candidate outside bounds");

  const JointSpec spec = problem.spec_with(candidate);
  const double dt = problem.dt();
  const auto& forces = problem.forces();
  const auto series = simulate_joint(
      problem.initial(), spec, [&](double t) { return total_force(forces, t); }, problem.observed().t.back(), dt);

  const auto& t_obs = problem.observed().t;
  const auto& q_obs = problem.observed_q();
  double sse = 0.0;
  for (std::size_t i = 0; i < t_obs.size(); ++i) {
    const double x = t_obs[i] / dt;
    const double nearest = std::round(x);
    double q_sim = 0.0;
    if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, x)) {
      q_sim = series[std::min(static_cast<std::size_t>(nearest), series.size() - 1)].q;
    } else {
      const auto k = std::min(static_cast<std::size_t>(std::floor(x)), series.size() - 2);
      const double w = x - static_cast<double>(k);
      q_sim = series[k].q + w * (series[k + 1].q - series[k].q);
    }
    const double d = q_sim - q_obs[i];
    sse += d * d;
  }
  return sse;
}

namespace {

struct BudgetSpent {};

constexpr double kLineTolerance = 1e-3;
constexpr double kMinWindow = 1e-6;

class CountingObjective {
 public:
  CountingObjective(const FitProblem& problem, std::size_t budget) : problem_(problem), budget_(budget) {}

  double operator()(const std::vector<double>& x) {
    if (evaluations_ >= budget_) throw BudgetSpent{};
    ++evaluations_;
    const double f = objective(problem_, x);
    // Strict improvement, ties broken lexicographically on the parameters.
    if (!best_ || f < best_f_ || (f == best_f_ && x < *best_)) {
      best_ = x;
      best_f_ = f;
    }
    return f;
  }

  std::size_t evaluations() const { return evaluations_; }
  const std::vector<double>& best() const { return *best_; }
  double best_f() const { return best_f_; }

 private:
  const FitProblem& problem_;
  std::size_t budget_;
  std::size_t evaluations_ = 0;
  std::optional<std::vector<double>> best_;
  double best_f_ = 0.0;
};

using Point = std::vector<double>;

// Golden-section search of f(s) over [a, b]; returns the best (s, f) seen,
// which is the incumbent (0, f_incumbent) when nothing beats it.
template <class F>
std::pair<double, double> golden_section(F&& f_of, double a, double b, double tol, double f_incumbent) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double best_s = 0.0;
  double best_f = f_incumbent;
  auto eval = [&](double s) {
    const double f = f_of(s);
    if (f < best_f) {
      best_f = f;
      best_s = s;
    }
    return f;
  };
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = eval(c);
  double fd = eval(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = eval(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = eval(d);
    }
  }
  return {best_s, best_f};
}

// The search runs on the unit cube; u = 0 and u = 1 are a parameter's bounds.
Point along(const Point& u, const Point& dir, double s) {
  Point p(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) p[i] = std::clamp(u[i] + s * dir[i], 0.0, 1.0);
  return p;
}

// Steps s for which u + s * dir stays inside the cube.
std::pair<double, double> box_interval(const Point& u, const Point& dir) {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (dir[i] > 0.0) {
      hi = std::min(hi, (1.0 - u[i]) / dir[i]);
      lo = std::max(lo, -u[i] / dir[i]);
    } else if (dir[i] < 0.0) {
      hi = std::min(hi, -u[i] / dir[i]);
      lo = std::max(lo, (1.0 - u[i]) / dir[i]);
    }
  }
  return {lo, hi};
}

}  // namespace

FitResult fit(const FitProblem& problem, const FitOptions& options) {
  const auto& free = problem.free();
  const std::size_t n = free.size();
  CountingObjective obj(problem, std::max<std::size_t>(options.budget, 1));

  auto params_at = [&](const Point& u) {
    Point x(n);
    for (std::size_t i = 0; i < n; ++i)
      x[i] = std::clamp(free[i].lo + u[i] * (free[i].hi - free[i].lo), free[i].lo, free[i].hi);
    return x;
  };
  std::vector<Point> axes;
  for (std::size_t i = 0; i < n; ++i) {
    if (free[i].hi <= free[i].lo) continue;
    Point e(n, 0.0);
    e[i] = 1.0;
    axes.push_back(std::move(e));
  }
  std::vector<Point> learned;

  FitResult result;
  Point u(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (free[i].hi > free[i].lo) u[i] = (free[i].init - free[i].lo) / (free[i].hi - free[i].lo);

  try {
    double f = obj(problem.init_values());
    int restarts_left = options.restarts;
    double window = 1.0;
    while (f > 0.0 && !axes.empty()) {
      const bool full_sweep = window >= 1.0;
      const double f_start = f;
      const Point u_start = u;
      double longest = 0.0;

      auto search = [&](const Point& dir) {
        auto [a, b] = box_interval(u, dir);
        a = std::max(a, -window);
        b = std::min(b, window);
        if (!(b > a)) return;
        const double tol = std::max(kLineTolerance * (b - a), 1e-9);
        const auto [step, fs] =
            golden_section([&](double s) { return obj(params_at(along(u, dir, s))); }, a, b, tol, f);
        if (fs < f) {
          const Point next = along(u, dir, step);
          for (std::size_t i = 0; i < n; ++i) longest = std::max(longest, std::abs(next[i] - u[i]));
          u = next;
          f = fs;
        }
      };

      for (const Point& dir : axes) search(dir);
      for (const Point& dir : learned) search(dir);
      // The sweep's net displacement becomes a search direction of its own,
      // which lets later sweeps follow valleys that no single axis can.
      Point net(n);
      double scale = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        net[i] = u[i] - u_start[i];
        scale = std::max(scale, std::abs(net[i]));
      }
      if (f < f_start && scale > 0.0 && axes.size() > 1) {
        for (double& c : net) c /= scale;
        search(net);
        learned.push_back(std::move(net));
        if (learned.size() > axes.size()) learned.erase(learned.begin());
      }
      ++result.iterations;

      const bool stalled = f == 0.0 || f_start - f <= options.relative_tolerance * f_start;
      const bool at_floor = window <= kMinWindow;
      if (stalled && (f == 0.0 || full_sweep || (at_floor && restarts_left <= 0))) break;
      if (stalled && at_floor) {
        --restarts_left;
        window = 1.0;
        continue;
      }
      // Windows follow the scale of the moves that are paying off.
      if (stalled)
        window = std::max(0.5 * window, kMinWindow);
      else
        window = std::clamp(std::max(2.0 * longest, 0.5 * window), kMinWindow, 0.25);
    }
    result.params = obj.best();
    result.residual_sse = obj.best_f();
    result.converged = true;
    result.status = FitStatus::Converged;
  } catch (const BudgetSpent&) {
    result.params = obj.best();
    result.residual_sse = obj.best_f();
    result.converged = false;
    result.status = FitStatus::BudgetExhausted;
  }
  result.evaluations = obj.evaluations();
  return result;
}

Trajectory generate_synthetic(const JointSpec& spec, const JointState& initial, std::span<const ForceProfile> forces,
                              double duration, double dt, double noise_sd, std::uint64_t seed,
                              const std::string& channel) {
  if (noise_sd < 0.0 || !std::isfinite(noise_sd))
    throw Error(ErrorCode::InvalidProblem, "noise_sd", "noise standard deviation must be >= 0");
  const auto series = simulate_joint(initial, spec, [&](double t) { return total_force(forces, t); }, duration, dt);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, noise_sd > 0.0 ? noise_sd : 1.0);

  Trajectory traj;
  std::vector<double> q;
  q.reserve(series.size());
  for (std::size_t k = 0; k < series.size(); ++k) {
    traj.t.push_back(static_cast<double>(k) * dt);
    q.push_back(noise_sd > 0.0 ? series[k].q + noise(rng) : series[k].q);
  }
  traj.add_channel(channel, std::move(q));
  return traj;
}

FitSpec load_fit_spec(const std::string& path) {
  namespace fs = std::filesystem;
  using detail::JsonReader;
  const std::string base_dir = fs::path(path).parent_path().string();
  const nlohmann::json doc = detail::parse_json_text(detail::read_text_file(path));
  try {
    const JsonReader r(doc, "");
    r.allow_keys({"asset", "joint", "observed", "channel", "initial_state", "forces", "free", "dt", "budget"});
    const Assembly asset = load_asset_file(resolve_fixture_path(r.at("asset").str(), base_dir));
    const std::string joint_id = r.at("joint").str();
    const JointSpec* spec = asset.find_joint(joint_id);
    if (spec == nullptr) throw Error(ErrorCode::UnknownJoint, joint_id, "joint not in " + asset.id);

    Trajectory observed = import_csv(resolve_fixture_path(r.at("observed").str(), base_dir));
    const std::string channel = r.at("channel").str();

    double q0 = spec->q_lower_bound;
    double q_dot0 = 0.0;
    bool open0 = false;
    if (r.has("initial_state")) {
      const JsonReader st = r.at("initial_state");
      st.allow_keys({"q", "q_dot", "s_open"});
      q0 = st.at("q").num();
      if (st.has("q_dot")) q_dot0 = st.at("q_dot").num();
      if (st.has("s_open")) open0 = st.at("s_open").boolean();
    }

    std::vector<ForceProfile> forces;
    if (r.has("forces")) {
      const JsonReader fs_list = r.at("forces");
      for (std::size_t i = 0; i < fs_list.size(); ++i) forces.push_back(detail::read_force_profile(fs_list[i]));
    }

    std::vector<FreeParameter> free;
    const JsonReader free_list = r.at("free");
    for (std::size_t i = 0; i < free_list.size(); ++i) {
      const JsonReader fp = free_list[i];
      fp.allow_keys({"param", "lo", "hi", "init"});
      const auto param = parse_fit_parameter(fp.at("param").str());
      if (!param) fp.at("param").fail("unknown parameter '" + fp.at("param").str() + "'");
      free.push_back({*param, fp.at("lo").num(), fp.at("hi").num(), fp.at("init").num()});
    }

    FitOptions options;
    if (r.has("budget")) options.budget = static_cast<std::size_t>(r.at("budget").num());
    const double dt = r.has("dt") ? r.at("dt").num() : kDefaultTimestep;
    return FitSpec{FitProblem(std::move(observed), channel, std::move(forces), *spec,
                              initial_state(*spec, q0, open0, q_dot0), std::move(free), dt),
                   options};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), path + ":" + e.context(), e.message());
  }
}

}  // namespace artjoint
