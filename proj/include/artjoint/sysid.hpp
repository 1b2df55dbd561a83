#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "artjoint/joint_dynamics.hpp"
#include "artjoint/scenario.hpp"
#include "artjoint/trajectory.hpp"

namespace artjoint {

/// Joint scalars the fitter can adjust. Stiffness entries must match the
/// template's stiffness variant.
enum class FitParameter {
  DampingD,
  MuS,
  CoulombFloor,
  EffectiveInertia,
  StiffnessK,
  KHigh,
  KLow,
  KMax,
  Alpha,
  Lambda,
};

std::string_view to_string(FitParameter p);
std::optional<FitParameter> parse_fit_parameter(std::string_view name);
double get_parameter(const JointSpec& spec, FitParameter p);
/// Throws InvalidProblem when the parameter does not exist on this spec.
void set_parameter(JointSpec& spec, FitParameter p, double value);

struct FreeParameter {
  FitParameter param = FitParameter::DampingD;
  double lo = 0.0;
  double hi = 0.0;
  double init = 0.0;
};

inline constexpr std::size_t kMinObservedSamples = 10;

/// Observed single-joint trajectory plus everything needed to replay it.
/// The constructor rejects empty free sets, init values outside their bounds
/// (InvalidProblem) and trajectories shorter than kMinObservedSamples
/// (InsufficientData).
class FitProblem {
 public:
  FitProblem(Trajectory observed, std::string channel, std::vector<ForceProfile> forces, JointSpec spec_template,
             JointState initial, std::vector<FreeParameter> free, double dt = kDefaultTimestep);

  const Trajectory& observed() const { return observed_; }
  const std::string& channel() const { return channel_; }
  const std::vector<double>& observed_q() const { return observed_.values[observed_.channel_index(channel_)]; }
  const std::vector<ForceProfile>& forces() const { return forces_; }
  const JointSpec& spec_template() const { return template_; }
  const JointState& initial() const { return initial_; }
  const std::vector<FreeParameter>& free() const { return free_; }
  double dt() const { return dt_; }

  JointSpec spec_with(std::span<const double> values) const;
  std::vector<double> init_values() const;

 private:
  Trajectory observed_;
  std::string channel_;
  std::vector<ForceProfile> forces_;
  JointSpec template_;
  JointState initial_;
  std::vector<FreeParameter> free_;
  double dt_;
};

double total_force(std::span<const ForceProfile> forces, double t);

/// Sum of squared position errors between a replay with the candidate
/// parameters and the observed samples. Throws InvalidProblem if the
/// candidate leaves its box.
double objective(const FitProblem& problem, std::span<const double> candidate);

enum class FitStatus { Converged, BudgetExhausted };

struct FitResult {
  std::vector<double> params;
  double residual_sse = 0.0;
  std::size_t iterations = 0;   // completed coordinate sweeps
  std::size_t evaluations = 0;  // objective calls
  bool converged = false;
  FitStatus status = FitStatus::Converged;
};

struct FitOptions {
  std::size_t budget = 5000;
  double relative_tolerance = 1e-8;
  int restarts = 2;
};

/// Coordinate-wise golden-section search inside the parameter box. Each sweep
/// line-searches every free parameter in turn, then the recent net
/// displacements of the search, over a window sized from the last moves that
/// paid off. A sweep that stalls halves the window; once the window bottoms
/// out the search restarts from full-width windows until the restart
/// allowance is spent. Deterministic.
FitResult fit(const FitProblem& problem, const FitOptions& options = {});

/// Forward simulation of one joint plus seeded Gaussian noise on q. The
/// channel carries q only.
Trajectory generate_synthetic(const JointSpec& spec, const JointState& initial, std::span<const ForceProfile> forces,
                              double duration, double dt, double noise_sd, std::uint64_t seed,
                              const std::string& channel = "joint.q");

struct FitSpec {
  FitProblem problem;
  FitOptions options;
};

/// `.fitspec.json` loader; relative paths resolve against the fitspec's
/// directory, then the fixture search path.
FitSpec load_fit_spec(const std::string& path);

}  // namespace artjoint
