#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cascnn/afc.hpp"

namespace cascnn {

// A single metro line 0..n-1 with commercial stations clustered in the
// middle and residential stations at the ends.
struct NetworkSpec {
  std::size_t n = 20;
  double residential_fraction = 0.6;
  int per_hop_minutes = 3;
};

// Gravity-style demand: per-pair base rates from role affinity and distance
// decay, shaped over the day by commute peaks, with correlated day-level
// volume noise. Rates are Poisson means per (pair, interval).
struct DemandProfile {
  double base_rate = 10.0;        // peak-scale mean trips per interval for an adjacent commute pair
  double distance_decay = 5.0;    // hops scale of exp(-hops / decay)
  double offpeak_level = 0.07;    // multiplier floor across the service day
  double am_peak = 1.0;           // residential -> commercial, 07:30-09:30
  double pm_peak = 0.9;           // commercial -> residential, 17:00-19:00
  double midday_level = 0.35;     // commercial <-> commercial, mid-day band
  double residential_level = 0.5; // residential <-> residential damping on the floor
  double day_jitter = 0.22;       // std of the day-level volume noise
  double day_jitter_rho = 0.7;    // AR(1) correlation of that noise across days
  int min_duration_noise_s = 60;  // bounded extra trip time
  int max_duration_noise_s = 180;
};

struct SynthConfig {
  NetworkSpec network;
  DemandProfile profile;
  std::size_t n_days = 15;              // weekdays
  std::string start_date = "2024-03-04";  // a Monday
  std::uint64_t seed = 42;
};

struct SynthDataset {
  std::vector<std::string> dates;
  std::vector<AfcRecord> records;  // ordered by day, then entry time
};

bool station_is_commercial(const NetworkSpec& network, std::size_t station);

// Poisson mean for pair (i, j) at an interval (day-level noise excluded, its
// mean is one). Intervals follow the default 05:00/23:00/30-minute grid.
double expected_rate(const SynthConfig& config, std::size_t origin, std::size_t destination,
                     std::size_t interval);

// Deterministic for a given config; trips always complete inside the service
// day, so ingested inflow and outflow totals balance exactly.
SynthDataset generate_dataset(const SynthConfig& config);

// afc.csv + manifest.json (station count, dates, generator parameter echo).
void write_dataset(const SynthDataset& dataset, const SynthConfig& config,
                   const std::filesystem::path& out_dir);

void generate(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace cascnn
