#pragma once

// Dataset bundles and the .uhsd file.
//
//   "UHSD"            4 bytes
//   version           u16 little-endian
//   header length     u32 little-endian
//   header            JSON (sample spec, split manifest, channel stats, ...)
//   per simulation    porosity, permeability (mD), S_G[0..n], P_bar[0..n]
//                     as nx*ny row-major little-endian binary32 tensors,
//                     followed by a u32 CRC-32 of those tensor bytes

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uhs/binary_io.hpp"
#include "uhs/dataset.hpp"
#include "uhs/json_conv.hpp"
#include "uhs/snapshot_io.hpp"

namespace uhs {

inline constexpr std::uint16_t kDatasetVersion = 1;
inline constexpr char kDatasetMagic[4] = {'U', 'H', 'S', 'D'};

struct SimRecord {
  std::uint32_t id = 0;
  std::vector<float> porosity;
  std::vector<float> permeability;             // mD
  std::vector<std::vector<float>> saturation;  // [step][cell], step 0 = initial
  std::vector<std::vector<float>> pressure;    // bar

  friend bool operator==(const SimRecord&, const SimRecord&) = default;
};

struct DatasetBundle {
  GridSpec grid;                 // after downsampling
  int downsample_factor = 1;
  double output_interval = 0.0;  // s
  int time_divisor = 1;          // time channel = step / time_divisor
  Schedule schedule;
  SplitManifest manifest;
  ChannelStats stats;
  std::vector<SimRecord> sims;

  std::size_t cells() const noexcept { return grid.cell_count(); }
  int n_steps() const noexcept { return manifest.n_steps; }
};

// ---------------------------------------------------------------------------
// Statistics over the training split

inline ChannelStats fit_stats(const DatasetBundle& b) {
  MomentAccumulator phi;
  MomentAccumulator k;
  MomentAccumulator p;
  MomentAccumulator sg;
  for (int s : b.manifest.train) {
    const auto& sim = b.sims.at(static_cast<std::size_t>(s));
    phi.add_all(sim.porosity);
    k.add_all(sim.permeability);
    for (int t = 0; t <= b.manifest.t_train; ++t) {
      p.add_all(sim.pressure.at(static_cast<std::size_t>(t)));
      sg.add_all(sim.saturation.at(static_cast<std::size_t>(t)));
    }
  }
  return {phi.moments("porosity"), k.moments("permeability"), p.moments("pressure"), sg.moments("saturation")};
}

// ---------------------------------------------------------------------------
// Samples

/// Target field at `step` in model space: S_G as is, P standardized.
inline std::vector<float> target_field(const DatasetBundle& b, int sim, int step, Target target) {
  const auto& rec = b.sims.at(static_cast<std::size_t>(sim));
  if (step < 0 || step > b.n_steps()) throw InvalidArgument("missing snapshot " + std::to_string(step));
  if (target == Target::saturation) return rec.saturation[static_cast<std::size_t>(step)];
  const auto& p = rec.pressure[static_cast<std::size_t>(step)];
  std::vector<float> out(p.size());
  for (std::size_t c = 0; c < p.size(); ++c) out[c] = static_cast<float>(b.stats.pressure.normalize(p[c]));
  return out;
}

/// Converts a model-space field back to physical units (bar for pressure).
inline std::vector<double> to_physical(std::span<const float> field, Target target, const ChannelStats& stats) {
  std::vector<double> out(field.size());
  for (std::size_t c = 0; c < field.size(); ++c) {
    out[c] = target == Target::pressure ? stats.pressure.denormalize(field[c]) : static_cast<double>(field[c]);
  }
  return out;
}

/// Input tensor (5 x ny x nx) for predicting `step`. In autoregressive mode
/// `previous` is the model-space target field at step - 1 (standardized
/// again for saturation); it is ignored in static mode.
inline std::vector<float> assemble_input(const DatasetBundle& b, int sim, int step, SampleMode mode, Target target,
                                         std::span<const float> previous) {
  const auto& rec = b.sims.at(static_cast<std::size_t>(sim));
  const std::size_t n = b.cells();
  if (step < 1) throw InvalidArgument("samples start at step 1");
  if (mode == SampleMode::autoregressive) {
    require(previous.size() == n, "previous-target field has the wrong size");
  } else if (step > b.time_divisor) {
    throw InvalidArgument("step " + std::to_string(step) + " outside the time channel range");
  }
  const auto dist = distance_channel(b.grid.nx, b.grid.ny);
  const float cycle = static_cast<float>(cycle_indicator(step, b.schedule, b.output_interval));
  std::vector<float> x(kInputChannels * n);
  for (std::size_t c = 0; c < n; ++c) {
    x[c] = static_cast<float>(b.stats.porosity.normalize(rec.porosity[c]));
    x[n + c] = static_cast<float>(b.stats.permeability.normalize(rec.permeability[c]));
    x[2 * n + c] = static_cast<float>(dist[c]);
    x[3 * n + c] = cycle;
  }
  if (mode == SampleMode::static_time) {
    std::fill(x.begin() + static_cast<std::ptrdiff_t>(4 * n), x.end(),
              static_cast<float>(time_channel(step, b.time_divisor)));
  } else {
    for (std::size_t c = 0; c < n; ++c) {
      x[4 * n + c] = target == Target::saturation ? static_cast<float>(b.stats.saturation.normalize(previous[c]))
                                                  : previous[c];
    }
  }
  return x;
}

/// Teacher-forced sample: autoregressive inputs carry the true previous field.
inline Sample assemble_sample(const DatasetBundle& b, int sim, int step, SampleMode mode, Target target) {
  if (step < 1 || step > b.n_steps()) throw InvalidArgument("missing snapshot " + std::to_string(step));
  Sample s;
  std::vector<float> prev;
  if (mode == SampleMode::autoregressive) prev = target_field(b, sim, step - 1, target);
  s.input = assemble_input(b, sim, step, mode, target, prev);
  s.target = target_field(b, sim, step, target);
  return s;
}

// ---------------------------------------------------------------------------
// Building from simulations

struct DatasetSource {
  std::uint32_t id = 0;
  GeoModel geo;
  SnapshotFile sim;
};

struct DatasetOptions {
  int downsample_factor = 1;
  SplitRatios ratios;
  std::uint64_t seed = 0;
  int time_divisor = 0;  // 0: number of output steps
};

inline SimRecord downsample_source(const DatasetSource& src, int factor) {
  const auto& g = src.geo.grid;
  const auto f = static_cast<std::size_t>(factor);
  auto to_f32 = [](const std::vector<double>& v) { return std::vector<float>(v.begin(), v.end()); };
  SimRecord r;
  r.id = src.id;
  r.porosity = to_f32(downsample(src.geo.porosity, g.nx, g.ny, f, BlockAverage::arithmetic));
  r.permeability = to_f32(downsample(src.geo.permeability, g.nx, g.ny, f, BlockAverage::geometric));
  std::vector<double> buf(g.cell_count());
  for (std::size_t s = 0; s < src.sim.snapshot_count(); ++s) {
    const auto& sg = src.sim.field(s, "S_G");
    buf.assign(sg.begin(), sg.end());
    r.saturation.push_back(to_f32(downsample(buf, g.nx, g.ny, f, BlockAverage::pore_weighted, src.geo.porosity)));
    const auto& p = src.sim.field(s, "P_bar");
    buf.assign(p.begin(), p.end());
    r.pressure.push_back(to_f32(downsample(buf, g.nx, g.ny, f, BlockAverage::arithmetic)));
  }
  return r;
}

inline DatasetBundle build_dataset(const std::vector<DatasetSource>& sources, const DatasetOptions& opt) {
  require(!sources.empty(), "no simulations for the dataset");
  const auto& first = sources.front();
  const auto snapshots = first.sim.snapshot_count();
  require(snapshots >= 2, "simulations need at least one output step");
  const auto digest = first.sim.header.value("schedule_digest", std::string());
  for (const auto& s : sources) {
    require(s.geo.grid == first.geo.grid && s.sim.grid == first.geo.grid, "simulations must share one grid");
    require(s.sim.snapshot_count() == snapshots, "simulations must share one output count");
    require(s.sim.header.value("schedule_digest", std::string()) == digest, "simulations must share one schedule");
  }
  require(opt.downsample_factor >= 1, "downsample factor must be >= 1");
  const auto f = static_cast<std::size_t>(opt.downsample_factor);
  if (first.geo.grid.nx % f != 0 || first.geo.grid.ny % f != 0) {
    throw InvalidArgument("resolution not divisible by downsample factor");
  }

  DatasetBundle b;
  b.grid = first.geo.grid;
  b.grid.nx /= f;
  b.grid.ny /= f;
  b.grid.dx *= static_cast<double>(f);
  b.grid.dy *= static_cast<double>(f);
  b.downsample_factor = opt.downsample_factor;
  b.schedule = first.sim.schedule();
  b.output_interval = first.sim.times.at(1) - first.sim.times.at(0);
  const int n_steps = static_cast<int>(snapshots) - 1;
  b.time_divisor = opt.time_divisor > 0 ? opt.time_divisor : n_steps;
  b.manifest = build_split_manifest(static_cast<int>(sources.size()), n_steps, opt.ratios, opt.seed);
  for (const auto& s : sources) b.sims.push_back(downsample_source(s, opt.downsample_factor));
  b.stats = fit_stats(b);
  return b;
}

// ---------------------------------------------------------------------------
// .uhsd codec

namespace detail {

inline json moments_json(const Moments& m) { return {{"mean", m.mean}, {"std", m.std}}; }
inline Moments moments_from(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

inline json dataset_header(const DatasetBundle& b) {
  json ids = json::array();
  for (const auto& s : b.sims) ids.push_back(s.id);
  const auto static_order = channel_order(SampleMode::static_time);
  const auto auto_order = channel_order(SampleMode::autoregressive);
  return {
      {"format", "uhsd"},
      {"version", kDatasetVersion},
      {"sample_spec",
       {{"resolution", {b.grid.nx, b.grid.ny}},
        {"downsample_factor", b.downsample_factor},
        {"modes", {"static", "auto"}},
        {"targets", {"saturation", "pressure"}},
        {"channels", {{"static", static_order}, {"auto", auto_order}}},
        {"time_divisor", b.time_divisor}}},
      {"grid", grid_to_json(b.grid)},
      {"manifest",
       {{"train", b.manifest.train},
        {"val_geo", b.manifest.val_geo},
        {"test", b.manifest.test},
        {"t_train", b.manifest.t_train},
        {"n_steps", b.manifest.n_steps}}},
      {"stats",
       {{"porosity", moments_json(b.stats.porosity)},
        {"permeability", moments_json(b.stats.permeability)},
        {"pressure", moments_json(b.stats.pressure)},
        {"saturation", moments_json(b.stats.saturation)}}},
      {"schedule", to_json_value(b.schedule)},
      {"output_interval_s", b.output_interval},
      {"sim_count", b.sims.size()},
      {"sim_ids", ids},
      {"chunk_layout", {"porosity", "permeability", "S_G[0..n_steps]", "P_bar[0..n_steps]", "crc32"}},
  };
}

inline void apply_header(const json& h, DatasetBundle& b) {
  const auto& spec = h.at("sample_spec");
  b.grid = grid_from_json(h.at("grid"));
  b.downsample_factor = spec.at("downsample_factor").get<int>();
  b.time_divisor = spec.at("time_divisor").get<int>();
  const auto& m = h.at("manifest");
  b.manifest.train = m.at("train").get<std::vector<int>>();
  b.manifest.val_geo = m.at("val_geo").get<std::vector<int>>();
  b.manifest.test = m.at("test").get<std::vector<int>>();
  b.manifest.t_train = m.at("t_train").get<int>();
  b.manifest.n_steps = m.at("n_steps").get<int>();
  const auto& st = h.at("stats");
  b.stats = {moments_from(st.at("porosity")), moments_from(st.at("permeability")), moments_from(st.at("pressure")),
             moments_from(st.at("saturation"))};
  b.schedule = schedule_from_json(h.at("schedule"));
  b.output_interval = h.at("output_interval_s").get<double>();
}

inline std::size_t chunk_floats(const DatasetBundle& b) {
  return b.cells() * (2 + 2 * static_cast<std::size_t>(b.n_steps() + 1));
}

}  // namespace detail

inline io::Bytes encode_dataset(const DatasetBundle& b) {
  const std::size_t n = b.cells();
  const auto frames = static_cast<std::size_t>(b.n_steps() + 1);
  const std::string header = detail::dataset_header(b).dump();
  io::Bytes out;
  out.insert(out.end(), kDatasetMagic, kDatasetMagic + 4);
  io::put_uint<std::uint16_t>(out, kDatasetVersion);
  io::put_uint<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  io::put_bytes(out, header);
  for (const auto& s : b.sims) {
    require(s.porosity.size() == n && s.permeability.size() == n, "simulation fields do not match the grid");
    require(s.saturation.size() == frames && s.pressure.size() == frames, "simulation step count mismatch");
    const auto begin = out.size();
    io::put_f32s(out, s.porosity);
    io::put_f32s(out, s.permeability);
    for (const auto& f : s.saturation) io::put_f32s(out, f);
    for (const auto& f : s.pressure) io::put_f32s(out, f);
    require(out.size() - begin == 4 * detail::chunk_floats(b), "simulation field sizes do not match the grid");
    io::put_uint<std::uint32_t>(out, io::crc32(std::span(out).subspan(begin)));
  }
  return out;
}

namespace detail {

/// Parses magic, version and header; leaves the reader at the first chunk.
inline json read_dataset_header(io::Reader& in) {
  const auto magic = in.get_string(4, "dataset magic");
  if (magic != std::string(kDatasetMagic, 4)) throw FormatError(FormatError::Kind::bad_magic, "not a .uhsd file");
  const auto version = in.get_uint<std::uint16_t>("dataset version");
  if (version != kDatasetVersion) {
    throw FormatError(FormatError::Kind::version_mismatch,
                      "unsupported .uhsd version " + std::to_string(version) + " (expected " +
                          std::to_string(kDatasetVersion) + ")");
  }
  const auto length = in.get_uint<std::uint32_t>("dataset header length");
  const auto text = in.get_string(length, "dataset header");
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .uhsd header: ") + e.what());
  }
}

}  // namespace detail

/// Header, manifest and statistics only; `sims` stays empty.
inline DatasetBundle decode_dataset_header(std::span<const std::uint8_t> data, std::size_t* header_end = nullptr) {
  io::Reader in(data);
  const auto h = detail::read_dataset_header(in);
  DatasetBundle b;
  try {
    detail::apply_header(h, b);
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .uhsd header: ") + e.what());
  }
  if (header_end) *header_end = in.offset();
  return b;
}

inline DatasetBundle decode_dataset(std::span<const std::uint8_t> data) {
  io::Reader in(data);
  const auto h = detail::read_dataset_header(in);
  DatasetBundle b;
  std::vector<std::uint32_t> ids;
  std::size_t count = 0;
  try {
    detail::apply_header(h, b);
    ids = h.at("sim_ids").get<std::vector<std::uint32_t>>();
    count = h.at("sim_count").get<std::size_t>();
  } catch (const json::exception& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .uhsd header: ") + e.what());
  }
  if (ids.size() != count) throw FormatError(FormatError::Kind::layout, "sim_ids length != sim_count");
  if (b.cells() == 0 || b.n_steps() < 1) throw FormatError(FormatError::Kind::layout, "empty dataset geometry");

  const std::size_t n = b.cells();
  const auto frames = static_cast<std::size_t>(b.n_steps() + 1);
  const std::size_t chunk_bytes = 4 * detail::chunk_floats(b);
  for (std::size_t s = 0; s < count; ++s) {
    const auto name = "simulation chunk " + std::to_string(s);
    const auto chunk = in.view(chunk_bytes, name);
    const auto stored = in.get_uint<std::uint32_t>(name + " checksum");
    if (io::crc32(chunk) != stored) throw FormatError(FormatError::Kind::checksum, "CRC mismatch in " + name);
    io::Reader c(chunk);
    SimRecord r;
    r.id = ids[s];
    r.porosity = c.get_f32s(n, name);
    r.permeability = c.get_f32s(n, name);
    for (std::size_t t = 0; t < frames; ++t) r.saturation.push_back(c.get_f32s(n, name));
    for (std::size_t t = 0; t < frames; ++t) r.pressure.push_back(c.get_f32s(n, name));
    b.sims.push_back(std::move(r));
  }
  if (in.remaining() != 0) throw FormatError(FormatError::Kind::layout, "trailing bytes in .uhsd file");
  try {
    b.manifest.validate(static_cast<int>(count));
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad split manifest: ") + e.what());
  }
  return b;
}

inline void write_dataset(const DatasetBundle& b, const std::filesystem::path& path) {
  io::write_file(path, encode_dataset(b));
}

inline DatasetBundle read_dataset(const std::filesystem::path& path) { return decode_dataset(io::read_file(path)); }

/// Reads only the leading bytes needed for the header.
inline DatasetBundle read_dataset_header(const std::filesystem::path& path) {
  const auto prefix = io::read_prefix(path, 10);
  io::Reader in(prefix);
  in.skip(6, "dataset preamble");
  const auto length = in.get_uint<std::uint32_t>("dataset header length");
  return decode_dataset_header(io::read_prefix(path, 10 + static_cast<std::size_t>(length)));
}

}  // namespace uhs
