#pragma once

#include <span>
#include <string>
#include <vector>

namespace artjoint {

/// Uniformly sampled channels over a shared time base. Joint channels are
/// named "<assembly>/<joint>.q" and ".q_dot"; marker channels
/// "<assembly>/<marker>.x|y|z".
struct Trajectory {
  std::vector<double> t;
  std::vector<std::string> channels;
  std::vector<std::vector<double>> values;  // values[c][k] is channel c at t[k]

  bool operator==(const Trajectory&) const = default;

  std::size_t size() const { return t.size(); }
  /// Index of a channel, or npos.
  std::size_t channel_index(const std::string& name) const;
  const std::vector<double>& channel(const std::string& name) const;
  void add_channel(std::string name, std::vector<double> samples);
};

struct ChannelError {
  std::string channel;
  double rmse = 0.0;
  double max_abs = 0.0;
};

struct Comparison {
  double rmse = 0.0;     // pooled over every channel and sample
  double max_abs = 0.0;
  std::size_t samples = 0;  // time points compared
  std::vector<ChannelError> per_channel;
};

/// Linear interpolation of (t, v) at time x; x must lie inside [t.front(), t.back()].
double interpolate(std::span<const double> t, std::span<const double> v, double x);

/// Compares matching channels. When time bases differ, `b` is linearly
/// resampled onto the samples of `a` that fall inside both spans.
/// Throws MismatchedChannels or DisjointTimeSpans.
Comparison compare(const Trajectory& a, const Trajectory& b);

/// Per-sample mean of repeated trials, resampled onto the first trial's time
/// base restricted to the common span.
Trajectory average(std::span<const Trajectory> trials);

std::string to_csv(const Trajectory& traj);
/// Throws MalformedCsv.
Trajectory from_csv(const std::string& text);

void export_csv(const Trajectory& traj, const std::string& path);
Trajectory import_csv(const std::string& path);

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace artjoint
