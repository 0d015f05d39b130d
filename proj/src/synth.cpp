#include "cascnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

namespace cascnn {

namespace {

constexpr int kServiceStartMin = 5 * 60;
constexpr int kServiceEndMin = 23 * 60;
constexpr int kIntervalMin = 30;
constexpr std::size_t kIntervalsPerDay = (kServiceEndMin - kServiceStartMin) / kIntervalMin;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Trapezoid window: ramp up over [a, b], plateau over [b, c], ramp down over
// [c, d]; zero outside.
double trapezoid(double minute, double a, double b, double c, double d) {
  if (minute <= a || minute >= d) return 0.0;
  if (minute < b) return (minute - a) / (b - a);
  if (minute <= c) return 1.0;
  return (d - minute) / (d - c);
}

void validate(const SynthConfig& config) {
  if (config.network.n < 2) throw ConfigError("synth: need at least 2 stations");
  if (config.network.per_hop_minutes <= 0) throw ConfigError("synth: travel time must be positive");
  if (config.network.residential_fraction < 0.0 || config.network.residential_fraction > 1.0) {
    throw ConfigError("synth: residential fraction must lie in [0, 1]");
  }
  if (config.n_days < 2) throw ConfigError("synth: need at least 2 days");
  if (config.profile.base_rate < 0.0 || config.profile.distance_decay <= 0.0) {
    throw ConfigError("synth: rates must be non-negative and decay positive");
  }
  if (config.profile.min_duration_noise_s < 1 ||
      config.profile.max_duration_noise_s < config.profile.min_duration_noise_s) {
    throw ConfigError("synth: duration noise bounds are inconsistent");
  }
}

// Day-level multiplicative volume factors with mean one: an AR(1) series in
// the deviation from one, clamped away from zero.
std::vector<double> day_factors(const SynthConfig& config) {
  std::vector<double> factors(config.n_days, 1.0);
  if (config.profile.day_jitter <= 0.0) return factors;
  std::mt19937_64 rng(splitmix64(config.seed ^ 0x6a09e667f3bcc908ULL));
  std::normal_distribution<double> noise(0.0, config.profile.day_jitter);
  double z = 0.0;
  for (std::size_t d = 0; d < config.n_days; ++d) {
    z = config.profile.day_jitter_rho * z + noise(rng);
    factors[d] = std::max(0.2, 1.0 + z);
  }
  return factors;
}

}  // namespace

bool station_is_commercial(const NetworkSpec& network, std::size_t station) {
  const std::size_t commercial =
      network.n - static_cast<std::size_t>(
                      std::llround(network.residential_fraction * static_cast<double>(network.n)));
  const std::size_t begin = (network.n - commercial) / 2;
  return station >= begin && station < begin + commercial;
}

double expected_rate(const SynthConfig& config, std::size_t origin, std::size_t destination,
                     std::size_t interval) {
  const NetworkSpec& net = config.network;
  const DemandProfile& p = config.profile;
  if (origin >= net.n || destination >= net.n) {
    throw ConfigError("expected_rate: station out of range");
  }
  if (origin == destination) return 0.0;

  const double hops = std::abs(static_cast<double>(origin) - static_cast<double>(destination));
  const double gravity = p.base_rate * std::exp(-hops / p.distance_decay);

  const bool o_com = station_is_commercial(net, origin);
  const bool d_com = station_is_commercial(net, destination);
  const double minute =
      kServiceStartMin + (static_cast<double>(interval) + 0.5) * kIntervalMin;

  double multiplier = p.offpeak_level;
  if (!o_com && d_com) {
    // Commute in: plateau over the 07:30-09:30 peak with shoulders.
    multiplier += p.am_peak * trapezoid(minute, 6 * 60 + 45, 7 * 60 + 30, 9 * 60 + 30,
                                        10 * 60 + 15);
  } else if (o_com && !d_com) {
    // Commute out: 17:00-19:00 plateau with a longer evening tail.
    multiplier += p.pm_peak * trapezoid(minute, 16 * 60 + 15, 17 * 60, 19 * 60, 20 * 60 + 45);
  } else if (o_com && d_com) {
    // Business traffic between the downtown stations through the day.
    multiplier += p.midday_level * trapezoid(minute, 9 * 60, 10 * 60, 16 * 60, 17 * 60 + 30);
  } else {
    multiplier *= p.residential_level;
  }
  return gravity * multiplier;
}

SynthDataset generate_dataset(const SynthConfig& config) {
  validate(config);
  SynthDataset dataset;

  std::int64_t epoch_day = parse_date(config.start_date);
  while (dataset.dates.size() < config.n_days) {
    if (!is_weekend(epoch_day)) dataset.dates.push_back(format_date(epoch_day));
    ++epoch_day;
  }

  const std::vector<double> factors = day_factors(config);
  const int hop_seconds = config.network.per_hop_minutes * 60;

  for (std::size_t d = 0; d < config.n_days; ++d) {
    const std::int64_t day_start = parse_date(dataset.dates[d]) * 86400;
    const std::int64_t service_end = day_start + kServiceEndMin * 60;
    std::mt19937_64 rng(splitmix64(config.seed) ^ splitmix64(d + 1));
    std::vector<AfcRecord> day_records;
    std::size_t trip_seq = 0;

    for (std::size_t t = 0; t < kIntervalsPerDay; ++t) {
      const std::int64_t interval_start = day_start + (kServiceStartMin + t * kIntervalMin) * 60;
      for (std::size_t i = 0; i < config.network.n; ++i) {
        for (std::size_t j = 0; j < config.network.n; ++j) {
          const double mean = expected_rate(config, i, j, t) * factors[d];
          if (mean <= 0.0) continue;
          std::poisson_distribution<int> count_dist(mean);
          const int count = count_dist(rng);
          for (int trip = 0; trip < count; ++trip) {
            std::uniform_int_distribution<int> entry_offset(0, kIntervalMin * 60 - 1);
            std::uniform_int_distribution<int> extra(config.profile.min_duration_noise_s,
                                                     config.profile.max_duration_noise_s);
            const std::int64_t entry = interval_start + entry_offset(rng);
            const std::int64_t duration =
                static_cast<std::int64_t>(std::llabs(static_cast<long long>(i) -
                                                     static_cast<long long>(j))) *
                    hop_seconds +
                extra(rng);
            const std::int64_t exit = entry + duration;
            if (exit >= service_end) continue;  // trip would outlive the service day
            AfcRecord record;
            record.card_id = "c" + std::to_string(d) + "_" + std::to_string(trip_seq++);
            record.entry_station = static_cast<int>(i);
            record.entry_time = entry;
            record.exit_station = static_cast<int>(j);
            record.exit_time = exit;
            day_records.push_back(std::move(record));
          }
        }
      }
    }
    std::stable_sort(day_records.begin(), day_records.end(),
                     [](const AfcRecord& a, const AfcRecord& b) {
                       return a.entry_time < b.entry_time;
                     });
    for (AfcRecord& record : day_records) dataset.records.push_back(std::move(record));
  }
  return dataset;
}

void write_dataset(const SynthDataset& dataset, const SynthConfig& config,
                   const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  const auto csv_path = out_dir / "afc.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw DataError("cannot write " + csv_path.string());
  csv << "card_id,entry_station,entry_time,exit_station,exit_time\n";
  for (const AfcRecord& record : dataset.records) {
    csv << record.card_id << ',' << record.entry_station << ','
        << format_datetime(record.entry_time) << ',' << record.exit_station << ','
        << format_datetime(record.exit_time) << '\n';
  }

  nlohmann::json manifest;
  manifest["n"] = config.network.n;
  manifest["dates"] = dataset.dates;
  manifest["generator"] = {
      {"seed", config.seed},
      {"n_days", config.n_days},
      {"start_date", config.start_date},
      {"residential_fraction", config.network.residential_fraction},
      {"per_hop_minutes", config.network.per_hop_minutes},
      {"base_rate", config.profile.base_rate},
      {"distance_decay", config.profile.distance_decay},
      {"offpeak_level", config.profile.offpeak_level},
      {"am_peak", config.profile.am_peak},
      {"pm_peak", config.profile.pm_peak},
      {"midday_level", config.profile.midday_level},
      {"residential_level", config.profile.residential_level},
      {"day_jitter", config.profile.day_jitter},
      {"day_jitter_rho", config.profile.day_jitter_rho},
      {"min_duration_noise_s", config.profile.min_duration_noise_s},
      {"max_duration_noise_s", config.profile.max_duration_noise_s},
      {"records", dataset.records.size()}};
  const auto manifest_path = out_dir / "manifest.json";
  std::ofstream manifest_out(manifest_path);
  if (!manifest_out) throw DataError("cannot write " + manifest_path.string());
  manifest_out << manifest.dump(2) << '\n';
}

void generate(const SynthConfig& config, const std::filesystem::path& out_dir) {
  const SynthDataset dataset = generate_dataset(config);
  write_dataset(dataset, config, out_dir);
}

}  // namespace cascnn
