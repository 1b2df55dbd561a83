#include "artjoint/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <future>
#include <cstring>
#include <sstream>

#include "artjoint/error.hpp"
#include "artjoint/sysid.hpp"
#include "json_util.hpp"

namespace artjoint {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

ordered_json error_json(const Error& e) {
  return ordered_json{{"code", std::string(to_string(e.code()))}, {"context", e.context()}, {"message", e.message()}};
}

double at_least_zero(double v) { return v == 0.0 ? 0.0 : v; }  // folds -0.0

std::size_t channel_or_throw(const Trajectory& traj, const std::string& name) {
  const std::size_t i = traj.channel_index(name);
  if (i == std::string::npos) throw Error(ErrorCode::UnresolvedReference, name, "fixture does not record this channel");
  return i;
}

const JointSlot& slot_or_throw(const WorldState& world, const std::string& path) {
  const auto i = find_joint_slot(world, path);
  if (!i) throw Error(ErrorCode::UnknownJoint, path, "fixture lacks this joint");
  return world.joints[*i];
}

ordered_json drawer_summary(const Scenario& s) {
  const RunResult r = run(s);
  const auto& q = r.trajectory.values[channel_or_throw(r.trajectory, "drawer/slide.q")];
  const JointSlot& slide = slot_or_throw(r.final_world, "drawer/slide");
  return ordered_json{{"duration", s.duration},
                      {"final_q", q.back()},
                      {"peak_q", *std::max_element(q.begin(), q.end())},
                      {"moved", q.back() > q.front()},
                      {"at_rest", slide.state.q_dot == 0.0}};
}

ordered_json microwave_summary(const Scenario& s) {
  const RunResult r = run(s);
  std::size_t opens = 0;
  for (const auto& ev : r.log)
    if (ev.kind == EventKind::Effect && ev.type == "set_open_state") ++opens;
  const JointSlot& door = slot_or_throw(r.final_world, "microwave/door");
  const double gap = std::abs(door.state.q - door.spec.q_upper_bound);
  return ordered_json{{"set_open_state_events", opens},
                      {"door_final_q", door.state.q},
                      {"door_upper_bound", door.spec.q_upper_bound},
                      {"reached_upper", gap <= 1e-3}};
}

ordered_json oven_summary(const Scenario& s) {
  const RunResult r = run(s);
  const Trajectory& tr = r.trajectory;
  const auto& q = tr.values[channel_or_throw(tr, "oven/door.q")];
  const auto& qd = tr.values[channel_or_throw(tr, "oven/door.q_dot")];
  const JointSlot& door = slot_or_throw(r.final_world, "oven/door");
  const double threshold = std::get<LatchTarget>(door.spec.target_policy).q_threshold;

  std::size_t release = q.size();
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (q[k] < threshold) {
      release = k;
      break;
    }
  }
  ordered_json out{{"threshold", threshold}, {"released", release < q.size()}};
  if (release == q.size()) return out;
  double peak = 0.0;
  for (std::size_t k = release; k < qd.size(); ++k) peak = std::max(peak, std::abs(qd[k]));
  const double release_speed = std::abs(qd[release]);
  out["release_t"] = tr.t[release];
  out["release_speed"] = release_speed;
  out["peak_closing_speed"] = peak;
  out["speed_ratio"] = release_speed > 0.0 ? peak / release_speed : 0.0;
  out["door_final_q"] = door.state.q;
  out["reached_lower"] = door.state.q == door.spec.q_lower_bound;
  out["snapped"] = out["reached_lower"].get<bool>() && peak > release_speed;
  return out;
}

ordered_json trashcan_summary(const Scenario& s) {
  Environment env(s);
  env.reset();
  double total = 0.0;
  std::size_t steps = 0;
  EnvStep last;
  while (!env.done()) {
    last = env.step(scripted_press_action(env));
    total += last.reward;
    ++steps;
  }
  std::size_t presses = 0;
  for (const auto& ev : env.log())
    if (ev.kind == EventKind::Trigger) ++presses;
  return ordered_json{{"steps", steps},
                      {"episode_time", env.time()},
                      {"total_reward", total},
                      {"final_reward", last.reward},
                      {"lid_final_q", at_least_zero(last.observation.goal_q)},
                      {"closed", last.terms.r_cls >= 1.0},
                      {"button_triggers", presses}};
}

struct DemoEntry {
  const char* name;
  const char* scenario;
  ordered_json (*summarize)(const Scenario&);
};

constexpr DemoEntry kDemos[] = {
    {"drawer", "drawer.scenario.json", drawer_summary},
    {"microwave", "microwave.scenario.json", microwave_summary},
    {"oven", "oven.scenario.json", oven_summary},
    {"trashcan", "trashcan_env.scenario.json", trashcan_summary},
};

std::string describe(const ordered_json& summary) {
  std::ostringstream ss;
  for (const auto& [key, value] : summary.items()) ss << "  " << key << ": " << value.dump() << "\n";
  return ss.str();
}

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int main(int argc, const char* const* argv);

 private:
  int validate();
  int simulate();
  int compare();
  int fit();
  int demo();
  int average();

  void emit(const ordered_json& doc) const { out_ << doc.dump(2) << "\n"; }
  int fail(const std::string& command, const Error& e, int code = kExitFailure) const;

  std::ostream& out_;
  std::ostream& err_;
  bool json_ = false;

  std::vector<std::string> inputs_;
  std::string output_;
  std::optional<double> dt_;
  std::optional<double> duration_;
  double tolerance_ = 0.0;
  std::string fixture_;
};

int Cli::fail(const std::string& command, const Error& e, int code) const {
  err_ << "artjoint " << command << ": " << e.what() << "\n";
  if (json_) emit(ordered_json{{"command", command}, {"ok", false}, {"error", error_json(e)}});
  return code;
}

int Cli::validate() {
  ordered_json results = ordered_json::array();
  bool all_ok = true;
  for (const auto& path : inputs_) {
    ordered_json entry{{"path", path}};
    try {
      const Assembly a = decode_asset(detail::read_text_file(path));
      const ValidationReport report = artjoint::validate(a);
      ordered_json rows = ordered_json::array();
      for (const auto& e : report) rows.push_back({{"path", e.path}, {"message", e.message}, {"code", e.code}});
      entry["ok"] = report.empty();
      entry["error"] = nullptr;
      entry["report"] = rows;
      if (!json_) {
        out_ << path << ": " << (report.empty() ? "ok" : std::to_string(report.size()) + " problem(s)") << "\n";
        for (const auto& e : report) out_ << "  " << e.code << " " << e.path << ": " << e.message << "\n";
      }
      if (!report.empty())
        err_ << "artjoint validate: " << path << ": " << report.size() << " invariant violation(s)\n";
      all_ok = all_ok && report.empty();
    } catch (const Error& e) {
      err_ << "artjoint validate: " << e.what() << "\n";
      entry["ok"] = false;
      entry["error"] = error_json(e);
      entry["report"] = ordered_json::array();
      all_ok = false;
    }
    results.push_back(std::move(entry));
  }
  if (json_) emit(ordered_json{{"command", "validate"}, {"ok", all_ok}, {"results", results}});
  return all_ok ? kExitOk : kExitFailure;
}

int Cli::simulate() {
  const bool many = inputs_.size() > 1;
  if (many) {
    std::error_code ec;
    fs::create_directories(output_, ec);
    if (ec) return fail("simulate", Error(ErrorCode::Io, output_, "cannot create output directory"));
  }
  struct Job {
    std::string scenario;
    std::string output;
    RunResult result;
  };
  std::vector<Job> jobs;
  for (const auto& path : inputs_) {
    std::string dest = output_;
    if (many) {
      std::string stem = fs::path(path).filename().string();
      for (const char* suffix : {".json", ".scenario"})
        if (stem.size() > std::strlen(suffix) && stem.ends_with(suffix)) stem.resize(stem.size() - std::strlen(suffix));
      dest = (fs::path(output_) / (stem + ".csv")).string();
    }
    jobs.push_back({path, dest, {}});
  }

  std::vector<std::future<RunResult>> pending;
  for (const auto& job : jobs) {
    pending.push_back(std::async(many ? std::launch::async : std::launch::deferred, [this, path = job.scenario] {
      Scenario s = load_scenario_file(path);
      if (dt_) s.dt = *dt_;
      if (duration_) s.duration = *duration_;
      return run(s);
    }));
  }
  std::optional<Error> first_error;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    try {
      jobs[i].result = pending[i].get();
      export_csv(jobs[i].result.trajectory, jobs[i].output);
    } catch (const Error& e) {
      err_ << "artjoint simulate: " << jobs[i].scenario << ": " << e.what() << "\n";
      if (!first_error) first_error = Error(e.code(), jobs[i].scenario + ":" + e.context(), e.message());
    }
  }
  if (first_error) {
    if (json_) emit(ordered_json{{"command", "simulate"}, {"ok", false}, {"error", error_json(*first_error)}});
    return kExitFailure;
  }

  ordered_json runs = ordered_json::array();
  for (const auto& job : jobs) {
    const Trajectory& tr = job.result.trajectory;
    runs.push_back({{"scenario", job.scenario},
                    {"output", job.output},
                    {"samples", tr.size()},
                    {"t_end", tr.t.empty() ? 0.0 : tr.t.back()},
                    {"channels", tr.channels},
                    {"events", job.result.log.size()}});
    if (!json_) out_ << job.scenario << " -> " << job.output << " (" << tr.size() << " samples)\n";
  }
  if (json_) emit(ordered_json{{"command", "simulate"}, {"ok", true}, {"runs", runs}});
  return kExitOk;
}

int Cli::compare() {
  try {
    const Trajectory a = import_csv(inputs_.at(0));
    const Trajectory b = import_csv(inputs_.at(1));
    const Comparison c = artjoint::compare(a, b);
    const bool pass = c.rmse <= tolerance_;
    if (json_) {
      ordered_json channels = ordered_json::array();
      for (const auto& ch : c.per_channel) channels.push_back({{"name", ch.channel}, {"rmse", ch.rmse}, {"max_abs", ch.max_abs}});
      emit(ordered_json{{"command", "compare"},
                        {"ok", pass},
                        {"rmse", c.rmse},
                        {"max_abs", c.max_abs},
                        {"samples", c.samples},
                        {"tolerance", tolerance_},
                        {"channels", channels}});
    } else {
      out_ << "rmse " << format_double(c.rmse) << " max_abs " << format_double(c.max_abs) << " over " << c.samples
           << " samples: " << (pass ? "within" : "exceeds") << " tolerance " << format_double(tolerance_) << "\n";
    }
    return pass ? kExitOk : kExitFailure;
  } catch (const Error& e) {
    return fail("compare", e);
  }
}

int Cli::fit() {
  try {
    const FitSpec spec = load_fit_spec(inputs_.at(0));
    const FitResult r = artjoint::fit(spec.problem, spec.options);
    ordered_json params = ordered_json::object();
    for (std::size_t i = 0; i < r.params.size(); ++i)
      params[std::string(to_string(spec.problem.free()[i].param))] = r.params[i];
    const ordered_json doc{{"command", "fit"},
                           {"ok", true},
                           {"converged", r.converged},
                           {"status", r.status == FitStatus::Converged ? "converged" : "budget_exhausted"},
                           {"residual_sse", r.residual_sse},
                           {"iterations", r.iterations},
                           {"evaluations", r.evaluations},
                           {"params", params}};
    if (!output_.empty()) detail::write_text_file(output_, doc.dump(2) + "\n");
    if (json_) {
      emit(doc);
    } else {
      out_ << (r.converged ? "converged" : "budget exhausted") << " after " << r.evaluations
           << " evaluations, sse " << format_double(r.residual_sse) << "\n";
      for (const auto& [name, value] : params.items()) out_ << "  " << name << " = " << value.dump() << "\n";
    }
    return kExitOk;
  } catch (const Error& e) {
    return fail("fit", e);
  }
}

int Cli::demo() {
  try {
    for (const auto& d : kDemos) {
      if (fixture_ != d.name) continue;
      const ordered_json summary = demo_summary(fixture_);
      if (json_)
        emit(ordered_json{{"command", "demo"}, {"ok", true}, {"fixture", fixture_}, {"summary", summary}});
      else
        out_ << fixture_ << ":\n" << describe(summary);
      return kExitOk;
    }
    return fail("demo", Error(ErrorCode::InvalidScenario, fixture_, "unknown fixture"), kExitUsage);
  } catch (const Error& e) {
    return fail("demo", e);
  }
}

int Cli::average() {
  try {
    std::vector<Trajectory> trials;
    for (const auto& path : inputs_) trials.push_back(import_csv(path));
    const Trajectory mean = artjoint::average(trials);
    export_csv(mean, output_);
    if (json_)
      emit(ordered_json{{"command", "average"},
                        {"ok", true},
                        {"trials", trials.size()},
                        {"output", output_},
                        {"samples", mean.size()}});
    else
      out_ << "averaged " << trials.size() << " trials -> " << output_ << " (" << mean.size() << " samples)\n";
    return kExitOk;
  } catch (const Error& e) {
    return fail("average", e);
  }
}

int Cli::main(int argc, const char* const* argv) {
  CLI::App app{"Articulated-object joint dynamics toolkit", "artjoint"};
  app.require_subcommand(1);
  app.add_flag("--json", json_, "Print machine-readable JSON on stdout");

  auto* v = app.add_subcommand("validate", "Check asset files and list every violated invariant");
  v->add_option("assets", inputs_, "Asset files (.artjoint.json)")->required()->check(CLI::ExistingFile);

  auto* s = app.add_subcommand("simulate", "Run scenarios and write recorded channels as CSV");
  s->add_option("scenarios", inputs_, "Scenario files")->required()->check(CLI::ExistingFile);
  s->add_option("-o,--output", output_, "CSV path, or a directory when several scenarios are given")->required();
  s->add_option("--dt", dt_, "Override the scenario timestep");
  s->add_option("--duration", duration_, "Override the scenario duration");

  auto* c = app.add_subcommand("compare", "RMSE between two trajectories; fails above the tolerance");
  c->add_option("a", inputs_, "Trajectory CSV files")->required()->expected(2)->check(CLI::ExistingFile);
  c->add_option("--tolerance", tolerance_, "Largest acceptable pooled RMSE")->check(CLI::NonNegativeNumber);

  auto* f = app.add_subcommand("fit", "Identify joint parameters from an observed trajectory");
  f->add_option("fitspec", inputs_, "Problem description (.fitspec.json)")->required()->expected(1)->check(
      CLI::ExistingFile);
  f->add_option("-o,--output", output_, "Write the fitted parameters as JSON");

  auto* d = app.add_subcommand("demo", "Run a shipped fixture and summarize it");
  d->add_option("fixture", fixture_, "drawer | microwave | oven | trashcan")->required();

  auto* a = app.add_subcommand("average", "Per-sample mean of several trials");
  a->add_option("trials", inputs_, "Trajectory CSV files")->required()->check(CLI::ExistingFile);
  a->add_option("-o,--output", output_, "Output CSV")->required();

  for (auto* sub : {v, s, c, f, d, a}) sub->add_flag("--json", json_, "Print machine-readable JSON on stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out_ << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out_ << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err_ << "artjoint: " << e.what() << "\n";
    return kExitUsage;
  }

  if (v->parsed()) return validate();
  if (s->parsed()) return simulate();
  if (c->parsed()) return compare();
  if (f->parsed()) return fit();
  if (d->parsed()) return demo();
  return average();
}

}  // namespace

Eigen::Vector3d scripted_press_action(const Environment& env) {
  const auto contact = env.press_contact();
  if (!contact) return Eigen::Vector3d::Zero();
  const auto& [button, axis] = *contact;
  const Observation obs = env.observe();
  const double limit = env.config().max_action;

  Eigen::Vector3d action;
  if ((obs.effector_position - button).norm() <= env.config().contact_radius) {
    // Hold position across the axis and lean into the button.
    const Eigen::Vector3d v_perp = obs.effector_velocity - obs.effector_velocity.dot(axis) * axis;
    action = 0.25 * limit * axis - 20.0 * v_perp;
  } else {
    action = 100.0 * (button - obs.effector_position) - 20.0 * obs.effector_velocity;
  }
  const double n = action.norm();
  if (n > limit) action *= limit / n;
  return action;
}

ordered_json demo_summary(const std::string& fixture) {
  for (const auto& d : kDemos)
    if (fixture == d.name) return d.summarize(load_scenario_file(resolve_fixture_path(d.scenario)));
  throw Error(ErrorCode::InvalidScenario, fixture, "unknown fixture");
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return Cli(out, err).main(argc, argv);
  } catch (const Error& e) {
    err << "artjoint: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "artjoint: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}

}  // namespace artjoint
