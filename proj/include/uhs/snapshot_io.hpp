#pragma once

// .sim files.
//
//   line 1   JSON header, terminated by '\n'
//   then     per snapshot, in order:
//              one nx*ny row-major little-endian binary32 tensor per channel,
//              in header "channels" order
//              well block: 6 x binary64 cumulative kg
//                (injected H2, cushion, water, produced H2, cushion, water)
//
// Header keys: format="uhs-sim", version=1, kind ("simulation" | "prediction"),
// grid, channels, snapshot_count, times_s, and for simulations schedule,
// schedule_digest, config. Prediction files written by other tools use the
// same layout with kind="prediction", a single channel, and the keys sim_id,
// target, mode and steps (the step index of each snapshot).

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uhs/binary_io.hpp"
#include "uhs/json_conv.hpp"
#include "uhs/simulator.hpp"

namespace uhs {

inline constexpr int kSimFormatVersion = 1;
inline constexpr std::size_t kWellBlockBytes = 6 * 8;

struct SnapshotFile {
  json header;
  GridSpec grid;
  std::vector<std::string> channels;
  std::vector<double> times;
  // frames[s][c] is the nx*ny field of channel c at snapshot s.
  std::vector<std::vector<std::vector<float>>> frames;
  std::vector<WellRecord> wells;

  std::size_t snapshot_count() const noexcept { return frames.size(); }

  int channel_index(const std::string& name) const {
    for (std::size_t c = 0; c < channels.size(); ++c) {
      if (channels[c] == name) return static_cast<int>(c);
    }
    return -1;
  }

  const std::vector<float>& field(std::size_t snapshot, const std::string& name) const {
    const int c = channel_index(name);
    if (c < 0) throw FormatError(FormatError::Kind::layout, "missing channel " + name);
    return frames.at(snapshot)[static_cast<std::size_t>(c)];
  }

  Schedule schedule() const { return schedule_from_json(header.at("schedule")); }
};

inline bool known_channel(const std::string& name) { return name == "P_bar" || name == "S_G" || name == "y"; }

inline SnapshotFile to_snapshot_file(const SnapshotSeries& series) {
  SnapshotFile f;
  f.grid = series.grid;
  f.channels = {"P_bar", "S_G", "y"};
  const auto schedule = to_json_value(series.schedule);
  f.header = {{"format", "uhs-sim"},
              {"version", kSimFormatVersion},
              {"kind", "simulation"},
              {"grid", grid_to_json(series.grid)},
              {"schedule", schedule},
              {"schedule_digest", json_digest(schedule)},
              {"config", to_json_value(series.config)}};
  for (const auto& s : series.snapshots) {
    f.times.push_back(s.time);
    std::vector<float> p(s.pressure.size());
    std::vector<float> sg(s.pressure.size());
    std::vector<float> y(s.pressure.size());
    for (std::size_t c = 0; c < p.size(); ++c) {
      p[c] = static_cast<float>(s.pressure[c] / units::bar);
      sg[c] = static_cast<float>(s.gas_saturation[c]);
      y[c] = static_cast<float>(s.h2_fraction[c]);
    }
    f.frames.push_back({std::move(p), std::move(sg), std::move(y)});
    f.wells.push_back(s.wells);
  }
  return f;
}

inline io::Bytes encode_sim(const SnapshotFile& f) {
  json header = f.header;
  header["format"] = "uhs-sim";
  header["version"] = kSimFormatVersion;
  header["grid"] = grid_to_json(f.grid);
  header["channels"] = f.channels;
  header["snapshot_count"] = f.frames.size();
  header["times_s"] = f.times;
  io::Bytes out;
  io::put_bytes(out, header.dump());
  out.push_back('\n');
  for (std::size_t s = 0; s < f.frames.size(); ++s) {
    for (const auto& field : f.frames[s]) io::put_f32s(out, field);
    const auto& w = s < f.wells.size() ? f.wells[s] : WellRecord{};
    for (double v : w.injected) io::put_f64(out, v);
    for (double v : w.produced) io::put_f64(out, v);
  }
  return out;
}

/// Strict reader: every size is checked against the header and trailing
/// bytes are rejected.
inline SnapshotFile decode_sim(std::span<const std::uint8_t> data) {
  io::Reader in(data);
  SnapshotFile f;
  try {
    f.header = json::parse(in.get_line(".sim header"));
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .sim header: ") + e.what());
  }
  if (f.header.value("format", "") != "uhs-sim") throw FormatError(FormatError::Kind::bad_magic, "not a .sim file");
  if (f.header.value("version", 0) != kSimFormatVersion) {
    throw FormatError(FormatError::Kind::version_mismatch, "unsupported .sim version");
  }
  try {
    f.grid = grid_from_json(f.header.at("grid"));
    f.channels = f.header.at("channels").get<std::vector<std::string>>();
    f.times = f.header.at("times_s").get<std::vector<double>>();
    const auto count = f.header.at("snapshot_count").get<std::size_t>();
    if (f.times.size() != count) throw FormatError(FormatError::Kind::layout, "times_s length != snapshot_count");
    f.frames.resize(count);
    f.wells.resize(count);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .sim header: ") + e.what());
  }
  if (f.channels.empty()) throw FormatError(FormatError::Kind::layout, "no channels");
  for (const auto& c : f.channels) {
    if (!known_channel(c)) throw FormatError(FormatError::Kind::layout, "unknown channel " + c);
  }
  const std::size_t cells = f.grid.cell_count();
  if (cells == 0) throw FormatError(FormatError::Kind::layout, "empty grid");
  for (std::size_t s = 0; s < f.frames.size(); ++s) {
    for (std::size_t c = 0; c < f.channels.size(); ++c) f.frames[s].push_back(in.get_f32s(cells, "snapshot tensor"));
    for (auto& v : f.wells[s].injected) v = in.get_f64("well block");
    for (auto& v : f.wells[s].produced) v = in.get_f64("well block");
  }
  if (in.remaining() != 0) throw FormatError(FormatError::Kind::layout, "trailing bytes in .sim file");
  return f;
}

inline void write_sim(const SnapshotFile& f, const std::filesystem::path& path) { io::write_file(path, encode_sim(f)); }
inline SnapshotFile read_sim(const std::filesystem::path& path) { return decode_sim(io::read_file(path)); }

}  // namespace uhs
