#pragma once

// .net checkpoints and training-history CSV.
//
// .net: one JSON line (format "uhs-net", version, spec, tensors [{name, shape}],
// plus caller metadata), then every tensor in manifest order as little-endian
// binary64.
//
// history CSV: epoch,train_mae,val_mae,lr with an empty val_mae on epochs
// without validation.

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uhs/binary_io.hpp"
#include "uhs/nn/train.hpp"
#include "uhs/nn/unet.hpp"

namespace uhs::nn {

inline constexpr int kNetFormatVersion = 1;

inline nlohmann::json spec_to_json(const NetSpec& s) {
  return {{"levels", s.levels}, {"width", s.width}, {"in_channels", s.in_channels}, {"head", to_string(s.head)}};
}

inline NetSpec spec_from_json(const nlohmann::json& j) {
  NetSpec s;
  s.levels = j.at("levels").get<int>();
  s.width = j.at("width").get<int>();
  s.in_channels = j.at("in_channels").get<int>();
  s.head = head_from_string(j.at("head").get<std::string>());
  s.validate();
  return s;
}

template <std::floating_point T>
io::Bytes encode_net(const UNet<T>& net, const nlohmann::json& meta = nlohmann::json::object()) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& p : net.layout()) tensors.push_back({{"name", p.name}, {"shape", p.shape}});
  nlohmann::json header = meta;
  header["format"] = "uhs-net";
  header["version"] = kNetFormatVersion;
  header["spec"] = spec_to_json(net.spec());
  header["tensors"] = tensors;
  io::Bytes out;
  io::put_bytes(out, header.dump());
  out.push_back('\n');
  for (T v : net.params()) io::put_f64(out, static_cast<double>(v));
  return out;
}

template <std::floating_point T>
struct LoadedNet {
  UNet<T> net;
  nlohmann::json header;
};

template <std::floating_point T>
LoadedNet<T> decode_net(std::span<const std::uint8_t> data) {
  io::Reader in(data);
  LoadedNet<T> r;
  try {
    r.header = nlohmann::json::parse(in.get_line(".net header"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .net header: ") + e.what());
  }
  if (r.header.value("format", "") != "uhs-net") throw FormatError(FormatError::Kind::bad_magic, "not a .net file");
  if (r.header.value("version", 0) != kNetFormatVersion) {
    throw FormatError(FormatError::Kind::version_mismatch, "unsupported .net version");
  }
  try {
    r.net = UNet<T>(spec_from_json(r.header.at("spec")), 0);
    const auto& tensors = r.header.at("tensors");
    const auto& layout = r.net.layout();
    if (tensors.size() != layout.size()) throw FormatError(FormatError::Kind::layout, "tensor count does not match spec");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (tensors[i].at("name").template get<std::string>() != layout[i].name ||
          tensors[i].at("shape").template get<std::vector<int>>() != layout[i].shape) {
        throw FormatError(FormatError::Kind::layout, "tensor " + layout[i].name + " does not match spec");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .net header: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw FormatError(FormatError::Kind::layout, std::string("bad .net spec: ") + e.what());
  }
  for (auto& v : r.net.params()) v = static_cast<T>(in.get_f64("parameters"));
  if (in.remaining() != 0) throw FormatError(FormatError::Kind::layout, "trailing bytes in .net file");
  return r;
}

template <std::floating_point T>
void write_net(const UNet<T>& net, const std::filesystem::path& path,
               const nlohmann::json& meta = nlohmann::json::object()) {
  io::write_file(path, encode_net(net, meta));
}

template <std::floating_point T>
LoadedNet<T> read_net(const std::filesystem::path& path) {
  return decode_net<T>(io::read_file(path));
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string history_csv(const std::vector<HistoryRow>& rows) {
  std::ostringstream os;
  os << "epoch,train_mae,val_mae,lr\n";
  for (const auto& r : rows) {
    os << r.epoch << ',' << format_double(r.train_mae) << ',';
    if (r.val_mae) os << format_double(*r.val_mae);
    os << ',' << format_double(r.lr) << '\n';
  }
  return os.str();
}

inline std::vector<HistoryRow> parse_history_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "epoch,train_mae,val_mae,lr") {
    throw FormatError(FormatError::Kind::layout, "history CSV header must be epoch,train_mae,val_mae,lr");
  }
  std::vector<HistoryRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 4) throw FormatError(FormatError::Kind::layout, "history row needs 4 fields: " + line);
    try {
      HistoryRow r;
      r.epoch = std::stoi(f[0]);
      r.train_mae = std::stod(f[1]);
      if (!f[2].empty()) r.val_mae = std::stod(f[2]);
      r.lr = std::stod(f[3]);
      rows.push_back(r);
    } catch (const std::exception&) {
      throw FormatError(FormatError::Kind::layout, "bad history row: " + line);
    }
  }
  return rows;
}

}  // namespace uhs::nn
