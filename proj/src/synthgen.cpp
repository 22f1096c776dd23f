#include "specpred/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace specpred {

namespace {

void require_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError(std::string(name) + " must lie in [0, 1]");
}

// Salt separating the sweep noise stream from the occupancy stream of a bin.
constexpr std::uint64_t kSweepSalt = 0x5eedf00dULL;

Rng channel_stream(const ChannelSpec& spec, std::uint64_t stream) {
  return make_stream(spec.seed ^ stream);
}

}  // namespace

void ChannelSpec::validate() const {
  std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, MarkovKind>) {
          require_probability(k.p01, "p01");
          require_probability(k.p10, "p10");
          if (k.initial != 0 && k.initial != 1) throw InputError("markov initial state must be 0 or 1");
        } else if constexpr (std::is_same_v<K, PeriodicKind>) {
          if (k.period_min < 2) throw InputError("period_min must be >= 2");
          if (!(k.duty > 0.0 && k.duty < 1.0)) throw InputError("duty must lie in (0, 1)");
          require_probability(k.jitter_prob, "jitter_prob");
          if (k.phase < 0) throw InputError("phase must be non-negative");
        } else if constexpr (std::is_same_v<K, StaticKind>) {
          if (k.state != 0 && k.state != 1) throw InputError("static state must be 0 or 1");
          require_probability(k.flip_prob, "flip_prob");
        } else {
          if (k.order < 2) throw InputError("lagged order must be >= 2");
          if (k.weights.size() != static_cast<std::size_t>(k.order))
            throw InputError("lagged weights must have `order` entries");
          for (double w : k.weights)
            if (!std::isfinite(w)) throw InputError("lagged weights must be finite");
          if (!std::isfinite(k.bias) || !(k.noise >= 0.0) || !std::isfinite(k.noise))
            throw InputError("lagged bias/noise must be finite, noise >= 0");
        }
      },
      kind);
}

void BandSpec::validate() const {
  if (channels.empty()) throw InputError("band has no channels");
  if (minutes < 2) throw InputError("band needs at least two minutes");
  if (!(burst_power_dbm > noise_floor_dbm)) throw InputError("burst power must exceed the noise floor");
  if (!std::isfinite(noise_floor_dbm) || !std::isfinite(burst_power_dbm)) throw InputError("band powers must be finite");
  if (samples_per_minute < 1) throw InputError("samples_per_minute must be >= 1");
  if (points_per_bin < 1) throw InputError("points_per_bin must be >= 1");
  if (!(bin_width_hz > 0.0)) throw InputError("bin width must be positive");
  for (const auto& c : channels) c.validate();
}

std::vector<std::uint8_t> gen_channel(const ChannelSpec& spec, std::size_t minutes, std::uint64_t stream) {
  spec.validate();
  std::vector<std::uint8_t> out(minutes, 0);
  Rng rng = channel_stream(spec, stream);
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, MarkovKind>) {
          std::uint8_t s = static_cast<std::uint8_t>(k.initial);
          for (std::size_t t = 0; t < minutes; ++t) {
            if (t > 0) s = s ? (bernoulli(rng, k.p10) ? 0 : 1) : (bernoulli(rng, k.p01) ? 1 : 0);
            out[t] = s;
          }
        } else if constexpr (std::is_same_v<K, PeriodicKind>) {
          const auto period = static_cast<std::size_t>(k.period_min);
          const auto on = static_cast<std::size_t>(
              std::clamp<long>(std::lround(k.duty * k.period_min), 1, k.period_min - 1));
          for (std::size_t t = 0; t < minutes; ++t) {
            std::uint8_t s = ((t + static_cast<std::size_t>(k.phase)) % period) < on;
            if (bernoulli(rng, k.jitter_prob)) s ^= 1;
            out[t] = s;
          }
        } else if constexpr (std::is_same_v<K, StaticKind>) {
          for (std::size_t t = 0; t < minutes; ++t) {
            std::uint8_t s = static_cast<std::uint8_t>(k.state);
            if (bernoulli(rng, k.flip_prob)) s ^= 1;
            out[t] = s;
          }
        } else {
          std::normal_distribution<double> gauss(0.0, 1.0);
          const auto order = static_cast<std::size_t>(k.order);
          for (std::size_t t = 0; t < minutes; ++t) {
            if (t < order) {
              out[t] = bernoulli(rng, 0.5);
              continue;
            }
            double sum = k.bias;
            for (std::size_t lag = 1; lag <= order; ++lag) sum += k.weights[lag - 1] * out[t - lag];
            const double z = gauss(rng);
            out[t] = sum + k.noise * z > 0.0;
          }
        }
      },
      spec.kind);
  return out;
}

OccupancyGrid gen_band(const BandSpec& band) {
  band.validate();
  OccupancyGrid grid(band.channels.size(), band.minutes, band.bin_width_hz, 0);
  const auto F = static_cast<std::ptrdiff_t>(band.channels.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t f = 0; f < F; ++f) {
    const auto seq = gen_channel(band.channels[f], band.minutes, static_cast<std::uint64_t>(f));
    std::copy(seq.begin(), seq.end(), grid.bin(static_cast<std::size_t>(f)).begin());
  }
  return grid;
}

namespace reference {

OccupancyGrid gen_band(const BandSpec& band) {
  band.validate();
  OccupancyGrid grid(band.channels.size(), band.minutes, band.bin_width_hz, 0);
  for (std::size_t f = 0; f < band.channels.size(); ++f) {
    const auto seq = gen_channel(band.channels[f], band.minutes, f);
    for (std::size_t t = 0; t < band.minutes; ++t) grid.set(f, t, seq[t]);
  }
  return grid;
}

}  // namespace reference

PowerSweep gen_sweep(const BandSpec& band) {
  const OccupancyGrid grid = gen_band(band);
  const std::size_t F = grid.bins();
  const std::size_t T = band.minutes;
  const auto ppb = static_cast<std::size_t>(band.points_per_bin);
  const auto spm = static_cast<std::size_t>(band.samples_per_minute);
  // Jitter of at most +-3 dB, shrunk so no reading reaches the midpoint.
  const double gap = band.burst_power_dbm - band.noise_floor_dbm;
  const double jitter = std::min(3.0, 0.45 * gap);

  PowerSweep s;
  s.intervals = T;
  s.freq_points.resize(F * ppb);
  const double step = band.bin_width_hz / static_cast<double>(ppb);
  for (std::size_t f = 0; f < F; ++f)
    for (std::size_t j = 0; j < ppb; ++j)
      s.freq_points[f * ppb + j] = band.start_freq_hz + static_cast<double>(f) * band.bin_width_hz +
                                   static_cast<double>(j) * step;
  const std::size_t cells = F * ppb * T;
  s.offsets.resize(cells + 1);
  for (std::size_t c = 0; c <= cells; ++c) s.offsets[c] = c * spm;
  s.power_dbm.assign(cells * spm, band.noise_floor_dbm);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t fi = 0; fi < static_cast<std::ptrdiff_t>(F); ++fi) {
    const auto f = static_cast<std::size_t>(fi);
    Rng rng = make_stream(band.channels[f].seed ^ f, kSweepSalt);
    for (std::size_t t = 0; t < T; ++t) {
      const bool occupied = grid.at(f, t) != 0;
      const std::size_t forced = occupied ? static_cast<std::size_t>(rng() % (ppb * spm)) : 0;
      for (std::size_t j = 0; j < ppb; ++j) {
        const std::size_t cell = (f * ppb + j) * T + t;
        for (std::size_t k = 0; k < spm; ++k) {
          const double u = 2.0 * uniform01(rng) - 1.0;
          const bool burst = occupied && (j * spm + k == forced || bernoulli(rng, 0.5));
          const double base = burst ? band.burst_power_dbm : band.noise_floor_dbm;
          s.power_dbm[cell * spm + k] = base + jitter * u;
        }
      }
    }
  }
  return s;
}

}  // namespace specpred
