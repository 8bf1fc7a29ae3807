#pragma once

// Heterogeneous porosity / permeability fields on a structured grid.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "uhs/error.hpp"
#include "uhs/grid.hpp"
#include "uhs/rng.hpp"

namespace uhs {

inline constexpr double kMinPorosity = 0.01;
inline constexpr double kMaxPorosity = 0.4;

enum class FieldKind { gaussian, fluvial };

struct FieldParams {
  FieldKind kind = FieldKind::gaussian;
  // Natural log of permeability in mD.
  double log_perm_mean = std::log(100.0);
  double log_perm_std = 0.5;
  double corr_length_x = 600.0;  // m
  double corr_length_y = 600.0;  // m
  // porosity = clamp(a + b * log10(k_mD), 0.01, 0.4)
  double porosity_a = 0.10;
  double porosity_b = 0.05;
  // Fluvial channels run along x with sinusoidal centerlines.
  int channel_count = 4;
  double channel_width = 360.0;       // m
  double channel_amplitude = 600.0;   // m
  double channel_wavelength = 4000.0; // m
  double channel_perm = 1000.0;       // mD
  double background_perm = 20.0;      // mD
  std::uint64_t seed = 0;
};

struct GeoModel {
  GridSpec grid;
  std::vector<double> porosity;      // dimensionless
  std::vector<double> permeability;  // mD

  void validate() const {
    grid.validate();
    require(porosity.size() == grid.cell_count() && permeability.size() == grid.cell_count(),
            "geomodel field length does not match grid");
    for (std::size_t c = 0; c < porosity.size(); ++c) {
      if (!(porosity[c] > 0.0 && porosity[c] < 1.0)) {
        throw InvalidArgument("porosity outside (0, 1) at cell " + std::to_string(c));
      }
      if (!(permeability[c] > 0.0) || !std::isfinite(permeability[c])) {
        throw InvalidArgument("non-positive permeability at cell " + std::to_string(c));
      }
    }
  }

  friend bool operator==(const GeoModel&, const GeoModel&) = default;
};

/// Clamped affine porosity law in log10 of permeability (mD).
inline double porosity_link(double permeability_md, double a, double b) {
  const double lg = permeability_md > 0.0 ? std::log10(permeability_md) : -INFINITY;
  double phi = a + b * lg;
  if (b == 0.0) phi = a;
  if (std::isnan(phi)) phi = kMinPorosity;
  return std::clamp(phi, kMinPorosity, kMaxPorosity);
}

namespace detail {

// In-place 2D FFT over a row-major (rows x cols) complex array.
inline void fft2(std::vector<std::complex<double>>& data, std::size_t cols, std::size_t rows) {
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in(std::max(cols, rows));
  std::vector<std::complex<double>> out;
  for (std::size_t r = 0; r < rows; ++r) {
    in.assign(data.begin() + static_cast<std::ptrdiff_t>(r * cols),
              data.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
    fft.fwd(out, in);
    std::copy(out.begin(), out.end(), data.begin() + static_cast<std::ptrdiff_t>(r * cols));
  }
  in.resize(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) in[r] = data[r * cols + c];
    fft.fwd(out, in);
    for (std::size_t r = 0; r < rows; ++r) data[r * cols + c] = out[r];
  }
}

inline void fill_porosity(GeoModel& geo, const FieldParams& p) {
  geo.porosity.resize(geo.permeability.size());
  for (std::size_t c = 0; c < geo.permeability.size(); ++c) {
    geo.porosity[c] = porosity_link(geo.permeability[c], p.porosity_a, p.porosity_b);
  }
}

}  // namespace detail

inline void validate(const FieldParams& p, const GridSpec& grid) {
  require(std::isfinite(p.log_perm_mean) && p.log_perm_std >= 0.0, "invalid log-permeability moments");
  if (p.kind == FieldKind::gaussian) {
    require(p.corr_length_x > 0.0 && p.corr_length_y > 0.0, "correlation lengths must be positive");
    require(p.corr_length_x >= 2.0 * grid.dx && p.corr_length_y >= 2.0 * grid.dy,
            "grid too coarse for the requested correlation length (needs >= 2 cells)");
  } else {
    require(p.channel_count >= 0, "channel count must be non-negative");
    require(p.channel_width > 0.0, "channel width must be positive");
    require(p.channel_width >= grid.dy, "channel width below one cell");
    require(p.channel_perm > p.background_perm && p.background_perm > 0.0,
            "in-channel permeability must exceed a positive background permeability");
    require(p.channel_amplitude >= 0.0, "channel amplitude must be non-negative");
    require(p.channel_amplitude == 0.0 || p.channel_wavelength > 0.0,
            "sinuous channels need a positive wavelength");
  }
}

/// Stationary log-normal permeability field with exponential covariance,
/// synthesized by circulant embedding on a doubled periodic grid. The raw
/// sample is shifted and scaled to hit the requested log-k mean and standard
/// deviation exactly.
inline GeoModel gen_gaussian_field(const FieldParams& params, const GridSpec& grid) {
  grid.validate();
  require(params.kind == FieldKind::gaussian, "gen_gaussian_field needs gaussian params");
  validate(params, grid);

  GeoModel geo{grid, {}, std::vector<double>(grid.cell_count())};
  if (params.log_perm_std == 0.0) {
    std::fill(geo.permeability.begin(), geo.permeability.end(), std::exp(params.log_perm_mean));
    detail::fill_porosity(geo, params);
    return geo;
  }

  const std::size_t mx = 2 * grid.nx;
  const std::size_t my = 2 * grid.ny;
  const std::size_t m = mx * my;
  std::vector<std::complex<double>> spectrum(m);
  for (std::size_t j = 0; j < my; ++j) {
    const double ly = static_cast<double>(std::min(j, my - j)) * grid.dy / params.corr_length_y;
    for (std::size_t i = 0; i < mx; ++i) {
      const double lx = static_cast<double>(std::min(i, mx - i)) * grid.dx / params.corr_length_x;
      spectrum[j * mx + i] = std::exp(-std::sqrt(lx * lx + ly * ly));
    }
  }
  detail::fft2(spectrum, mx, my);

  CounterRng rng(params.seed);
  std::vector<std::complex<double>> noise(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double re = rng.normal();
    const double im = rng.normal();
    const double lambda = std::max(spectrum[k].real(), 0.0);
    noise[k] = std::sqrt(lambda / static_cast<double>(m)) * std::complex<double>(re, im);
  }
  detail::fft2(noise, mx, my);

  std::vector<double> z(grid.cell_count());
  for (std::size_t j = 0; j < grid.ny; ++j) {
    for (std::size_t i = 0; i < grid.nx; ++i) z[grid.index(i, j)] = noise[j * mx + i].real();
  }
  double mean = 0.0;
  for (double v : z) mean += v;
  mean /= static_cast<double>(z.size());
  double var = 0.0;
  for (double v : z) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(z.size()));
  require(sd > 0.0, "degenerate Gaussian sample");

  for (std::size_t c = 0; c < z.size(); ++c) {
    const double logk = params.log_perm_mean + params.log_perm_std * (z[c] - mean) / sd;
    geo.permeability[c] = std::exp(logk);
  }
  detail::fill_porosity(geo, params);
  return geo;
}

/// Sinuous high-permeability channels over a uniform background.
inline GeoModel gen_fluvial_field(const FieldParams& params, const GridSpec& grid) {
  grid.validate();
  require(params.kind == FieldKind::fluvial, "gen_fluvial_field needs fluvial params");
  validate(params, grid);

  GeoModel geo{grid, {}, std::vector<double>(grid.cell_count(), params.background_perm)};
  const double extent_y = static_cast<double>(grid.ny) * grid.dy;
  const double margin = params.channel_amplitude + 0.5 * params.channel_width;
  CounterRng rng(params.seed);
  for (int c = 0; c < params.channel_count; ++c) {
    const double u = rng.uniform();
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    double center = grid.origin_y + u * extent_y;
    if (extent_y > 2.0 * margin) center = grid.origin_y + margin + u * (extent_y - 2.0 * margin);
    for (std::size_t i = 0; i < grid.nx; ++i) {
      const double x = grid.origin_x + (static_cast<double>(i) + 0.5) * grid.dx;
      double yc = center;
      if (params.channel_amplitude > 0.0) {
        yc += params.channel_amplitude *
              std::sin(2.0 * std::numbers::pi * (x - grid.origin_x) / params.channel_wavelength + phase);
      }
      for (std::size_t j = 0; j < grid.ny; ++j) {
        const double y = grid.origin_y + (static_cast<double>(j) + 0.5) * grid.dy;
        if (std::abs(y - yc) <= 0.5 * params.channel_width) {
          geo.permeability[grid.index(i, j)] = params.channel_perm;
        }
      }
    }
  }
  detail::fill_porosity(geo, params);
  return geo;
}

inline GeoModel generate_field(const FieldParams& params, const GridSpec& grid) {
  return params.kind == FieldKind::gaussian ? gen_gaussian_field(params, grid)
                                            : gen_fluvial_field(params, grid);
}

}  // namespace uhs
