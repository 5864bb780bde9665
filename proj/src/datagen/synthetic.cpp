// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include "chronosteer/datagen.hpp"
#include "chronosteer/errors.hpp"
#include "chronosteer/random.hpp"

namespace chronosteer::datagen {

std::vector<SourceMix> SyntheticSourceConfig::default_mixes() {
  SourceMix seasonal{.name = "seasonal", .periods = {24.0, 12.0}, .event_rate = 0.3};
  SourceMix trend{.name = "trend",
                  .slope = {-0.03, 0.03},
                  .periods = {48.0},
                  .amplitude = {0.2, 0.8},
                  .event_rate = 0.2};
  SourceMix noisy{.name = "noisy",
                  .periods = {24.0},
                  .amplitude = {0.5, 1.5},
                  .noise_sigma = 0.35,
                  .event_rate = 0.2};
  SourceMix multi{.name = "multiscale", .periods = {7.0, 32.0, 96.0}, .event_rate = 0.4};
  return {seasonal, trend, noisy, multi};
}

void SyntheticSourceConfig::validate() const {
  if (count == 0 || length == 0) throw UsageError("source config: count and length must be positive");
  if (mixes.empty()) throw UsageError("source config: no component mixes");
  for (const SourceMix& m : mixes) {
    auto ok = [](Range r) { return r.lo <= r.hi; };
    if (!ok(m.level) || !ok(m.slope) || !ok(m.amplitude) || !ok(m.level_shift) ||
        !ok(m.amplitude_shift))
      throw UsageError("source mix '" + m.name + "': empty range");
    if (m.noise_sigma < 0.0 || m.event_rate < 0.0 || m.event_rate > 1.0)
      throw UsageError("source mix '" + m.name + "': bad noise or event rate");
    for (double p : m.periods)
      if (!(p > 0.0)) throw UsageError("source mix '" + m.name + "': periods must be positive");
  }
}

namespace {

double draw(Rng& rng, Range r) { return r.lo == r.hi ? r.lo : uniform(rng, r.lo, r.hi); }

}  // namespace

std::vector<SourceSeries> generate_source_series(const SyntheticSourceConfig& cfg) {
  cfg.validate();
  std::vector<SourceSeries> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    const SourceMix& mix = cfg.mixes[i % cfg.mixes.size()];
    Rng rng = substream(cfg.seed, 0, i);
    const double level = draw(rng, mix.level);
    const double slope = draw(rng, mix.slope);
    std::vector<double> amps, phases;
    for (std::size_t k = 0; k < mix.periods.size(); ++k) {
      amps.push_back(draw(rng, mix.amplitude));
      phases.push_back(mix.random_phase ? uniform(rng, 0.0, 2.0 * std::numbers::pi) : 0.0);
    }
    const bool event = mix.event_rate > 0.0 && uniform(rng, 0.0, 1.0) < mix.event_rate;
    const bool level_event = uniform(rng, 0.0, 1.0) < 0.5;
    const std::size_t event_at =
        event ? static_cast<std::size_t>(uniform(rng, 0.0, static_cast<double>(cfg.length))) : cfg.length;
    const double shift = draw(rng, mix.level_shift);
    const double gain = draw(rng, mix.amplitude_shift);
    std::normal_distribution<double> noise(0.0, 1.0);

    series::Series v(cfg.length);
    for (std::size_t t = 0; t < cfg.length; ++t) {
      const double tt = static_cast<double>(t);
      double seasonal = 0.0;
      for (std::size_t k = 0; k < mix.periods.size(); ++k)
        seasonal += amps[k] * std::sin(2.0 * std::numbers::pi * tt / mix.periods[k] + phases[k]);
      double x = level + slope * tt;
      if (t >= event_at) {
        if (level_event)
          x += shift;
        else
          seasonal *= gain;
      }
      x += seasonal;
      if (mix.noise_sigma > 0.0) x += mix.noise_sigma * noise(rng);
      v[t] = x;
    }
    out.push_back({mix.name, std::move(v)});
  }
  return out;
}

std::vector<TaggedSlice> window_sources(const std::vector<SourceSeries>& sources,
                                        const series::WindowSpec& spec) {
  std::vector<TaggedSlice> out;
  for (const SourceSeries& s : sources)
    for (series::Slice& w : series::slide_windows(s.values, spec))
      out.push_back({std::move(w), s.domain});
  return out;
}

}  // namespace chronosteer::datagen
