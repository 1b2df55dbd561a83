#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "artjoint/error.hpp"
#include "artjoint/trajectory.hpp"
#include "json_util.hpp"

namespace artjoint {

std::size_t Trajectory::channel_index(const std::string& name) const {
  const auto it = std::find(channels.begin(), channels.end(), name);
  return it == channels.end() ? std::string::npos : static_cast<std::size_t>(it - channels.begin());
}

const std::vector<double>& Trajectory::channel(const std::string& name) const {
  const std::size_t i = channel_index(name);
  if (i == std::string::npos) throw Error(ErrorCode::MismatchedChannels, name, "no such channel");
  return values[i];
}

void Trajectory::add_channel(std::string name, std::vector<double> samples) {
  channels.push_back(std::move(name));
  values.push_back(std::move(samples));
}

double interpolate(std::span<const double> t, std::span<const double> v, double x) {
  if (t.empty()) throw Error(ErrorCode::DisjointTimeSpans, "", "empty time base");
  if (x <= t.front()) return v.front();
  if (x >= t.back()) return v.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), x) - t.begin());
  const std::size_t lo = hi - 1;
  if (t[lo] == x) return v[lo];
  const double w = (x - t[lo]) / (t[hi] - t[lo]);
  return v[lo] + w * (v[hi] - v[lo]);
}

Comparison compare(const Trajectory& a, const Trajectory& b) {
  for (const auto& name : a.channels)
    if (b.channel_index(name) == std::string::npos)
      throw Error(ErrorCode::MismatchedChannels, name, "channel missing from second trajectory");
  for (const auto& name : b.channels)
    if (a.channel_index(name) == std::string::npos)
      throw Error(ErrorCode::MismatchedChannels, name, "channel missing from first trajectory");

  Comparison out;
  if (a.size() == 0 && b.size() == 0) {
    for (const auto& name : a.channels) out.per_channel.push_back({name, 0.0, 0.0});
    return out;
  }
  if (a.size() == 0 || b.size() == 0) throw Error(ErrorCode::DisjointTimeSpans, "", "one trajectory is empty");

  const bool same_base = a.t == b.t;
  const double start = std::max(a.t.front(), b.t.front());
  const double end = std::min(a.t.back(), b.t.back());
  if (start > end) throw Error(ErrorCode::DisjointTimeSpans, "", "time spans do not overlap");

  std::vector<std::size_t> rows;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (same_base || (a.t[k] >= start && a.t[k] <= end)) rows.push_back(k);
  out.samples = rows.size();

  double pooled_sq = 0.0;
  for (std::size_t c = 0; c < a.channels.size(); ++c) {
    const auto& va = a.values[c];
    const auto& vb = b.values[b.channel_index(a.channels[c])];
    double sq = 0.0;
    double worst = 0.0;
    for (const std::size_t k : rows) {
      const double other = same_base ? vb[k] : interpolate(b.t, vb, a.t[k]);
      const double d = va[k] - other;
      sq += d * d;
      worst = std::max(worst, std::abs(d));
    }
    pooled_sq += sq;
    const double rmse = rows.empty() ? 0.0 : std::sqrt(sq / static_cast<double>(rows.size()));
    out.per_channel.push_back({a.channels[c], rmse, worst});
    out.max_abs = std::max(out.max_abs, worst);
  }
  const std::size_t count = rows.size() * a.channels.size();
  out.rmse = count == 0 ? 0.0 : std::sqrt(pooled_sq / static_cast<double>(count));
  return out;
}

Trajectory average(std::span<const Trajectory> trials) {
  if (trials.empty()) throw Error(ErrorCode::InsufficientData, "", "no trials to average");
  const Trajectory& base = trials.front();
  double start = base.t.empty() ? 0.0 : base.t.front();
  double end = base.t.empty() ? 0.0 : base.t.back();
  for (const auto& tr : trials) {
    if (tr.channels.size() != base.channels.size())
      throw Error(ErrorCode::MismatchedChannels, "", "trials record different channels");
    for (const auto& name : base.channels)
      if (tr.channel_index(name) == std::string::npos)
        throw Error(ErrorCode::MismatchedChannels, name, "channel missing from a trial");
    if (tr.t.empty()) throw Error(ErrorCode::DisjointTimeSpans, "", "empty trial");
    start = std::max(start, tr.t.front());
    end = std::min(end, tr.t.back());
  }
  if (start > end) throw Error(ErrorCode::DisjointTimeSpans, "", "trials do not share a time span");

  Trajectory out;
  for (const double t : base.t)
    if (t >= start && t <= end) out.t.push_back(t);
  for (const auto& name : base.channels) {
    std::vector<double> mean(out.t.size(), 0.0);
    for (const auto& tr : trials) {
      const auto& v = tr.channel(name);
      for (std::size_t k = 0; k < out.t.size(); ++k) mean[k] += interpolate(tr.t, v, out.t[k]);
    }
    for (double& m : mean) m /= static_cast<double>(trials.size());
    out.add_channel(name, std::move(mean));
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_csv(const Trajectory& traj) {
  std::string out = "t";
  for (const auto& name : traj.channels) out += "," + name;
  out += "\n";
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out += format_double(traj.t[k]);
    for (const auto& v : traj.values) {
      out += ",";
      out += format_double(v[k]);
    }
    out += "\n";
  }
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_cell(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line), "not a number: '" + cell + "'");
  return v;
}

}  // namespace

Trajectory from_csv(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto nl = text.find('\n', start);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw Error(ErrorCode::MalformedCsv, "line 1", "missing header row");

  const auto header = split_line(lines.front());
  if (header.front() != "t") throw Error(ErrorCode::MalformedCsv, "line 1", "first column must be 't'");
  Trajectory traj;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c].empty()) throw Error(ErrorCode::MalformedCsv, "line 1", "empty channel name");
    if (traj.channel_index(header[c]) != std::string::npos)
      throw Error(ErrorCode::MalformedCsv, "line 1", "duplicate channel " + header[c]);
    traj.add_channel(header[c], {});
  }
  for (std::size_t l = 1; l < lines.size(); ++l) {
    const auto cells = split_line(lines[l]);
    if (cells.size() != header.size())
      throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(l + 1), "wrong number of columns");
    const double t = parse_cell(cells[0], l + 1);
    if (!traj.t.empty() && !(t > traj.t.back()))
      throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(l + 1), "time must be strictly increasing");
    traj.t.push_back(t);
    for (std::size_t c = 1; c < cells.size(); ++c) traj.values[c - 1].push_back(parse_cell(cells[c], l + 1));
  }
  return traj;
}

void export_csv(const Trajectory& traj, const std::string& path) { detail::write_text_file(path, to_csv(traj)); }

Trajectory import_csv(const std::string& path) {
  try {
    return from_csv(detail::read_text_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MalformedCsv) throw;
    throw Error(e.code(), path + ":" + e.context(), e.message());
  }
}

}  // namespace artjoint
