// Copyright 2026 The pvedge Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Inverter telemetry at 15-minute resolution: CSV ingestion, cleaning,
// seeded train/test splitting and a synthetic generator.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "pvedge/common.hpp"

namespace pvedge {

// Canonical feature order of the model input vector.
enum Feature : std::size_t {
  kVaRms = 0,
  kVbRms,
  kVcRms,
  kIaRms,
  kIbRms,
  kIcRms,
  kIrradiance,
  kAmbientTemp,
  kModuleTemp,
  kHumidity,
  kWindSpeed,
  kHourFrac,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "va_rms",       "vb_rms",      "vc_rms",   "ia_rms",     "ib_rms",     "ic_rms",
    "irradiance",   "ambient_temp", "module_temp", "humidity", "wind_speed", "hour_frac",
};

// hour_frac resolution in bits.
inline constexpr int kHourFracBits = 16;

// CSV header. hour_frac is not a column; it is derived from the local clock
// reading of the timestamp.
inline constexpr std::array<std::string_view, 14> kCsvColumns = {
    "timestamp",  "va_rms",       "vb_rms",      "vc_rms",   "ia_rms",     "ib_rms", "ic_rms",
    "irradiance", "ambient_temp", "module_temp", "humidity", "wind_speed", "p_kw",   "q_kvar",
};

// Samples per day at 15-minute resolution.
inline constexpr int kSlotsPerDay = 96;

using FeatureVector = std::array<double, kFeatureCount>;

struct SampleRecord {
  std::chrono::sys_seconds timestamp{};
  FeatureVector features{};
  double active_power = 0.0;    // kW
  double reactive_power = 0.0;  // kvar

  double label(Target target) const {
    return target == Target::active ? active_power : reactive_power;
  }
  bool operator==(const SampleRecord&) const = default;
};

struct InverterDataset {
  int inverter_id = 1;
  double capacity = 0.0;  // kW
  // Offset of the local clock used when writing timestamps back out.
  int utc_offset_minutes = 0;
  std::vector<std::string> feature_names = {kFeatureNames.begin(), kFeatureNames.end()};
  std::vector<SampleRecord> records;

  bool operator==(const InverterDataset&) const = default;
};

struct SplitDataset {
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> test;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
};

// Parses "YYYY-MM-DDTHH:MM[:SS][Z|+HH:MM|-HH:MM]" (a space may replace the T).
// A missing offset means UTC. Throws Error(parse).
struct ParsedTimestamp {
  std::chrono::sys_seconds utc;
  int offset_minutes = 0;
};
ParsedTimestamp parse_timestamp(std::string_view text);
std::string format_timestamp(std::chrono::sys_seconds utc, int offset_minutes);

// Reads the canonical CSV. Empty cells become NaN; call clean() afterwards.
// Records are returned sorted by timestamp.
InverterDataset read_csv(std::istream& in, double capacity, int inverter_id = 1);
InverterDataset load_csv(const std::filesystem::path& path, double capacity, int inverter_id = 1);

void write_csv(const InverterDataset& dataset, std::ostream& out);
void save_csv(const InverterDataset& dataset, const std::filesystem::path& path);

// Physical plausibility of a fully populated record for an inverter of the
// given capacity.
bool is_physical(const SampleRecord& record, double capacity);

// Forward-fills missing features, drops leading rows that cannot be filled,
// rows with a missing label and rows outside physical bounds.
// Throws Error(empty_dataset) when nothing survives.
InverterDataset clean(const InverterDataset& dataset);

// Seeded Fisher-Yates permutation; the first floor(train_fraction * n)
// permuted records form the training set.
SplitDataset split(const InverterDataset& dataset, double train_fraction, std::uint64_t seed);

struct SynthOptions {
  unsigned n_days = 30;
  double capacity = 10.0;
  std::uint64_t seed = 42;
  int inverter_id = 1;
  int utc_offset_minutes = 8 * 60;
  std::chrono::sys_days start_day = std::chrono::sys_days{std::chrono::year{2024} / 5 / 15};
};

// Local clock hours between which the synthetic sun is up.
inline constexpr double kSunriseHour = 6.0;
inline constexpr double kSunsetHour = 19.0;

InverterDataset synth_generate(const SynthOptions& options);
InverterDataset synth_generate(unsigned n_days, double capacity, std::uint64_t seed);

// Feature rows and labels of a record set, in record order.
std::vector<FeatureVector> feature_rows(const std::vector<SampleRecord>& records);
std::vector<double> labels(const std::vector<SampleRecord>& records, Target target);

}  // namespace pvedge
