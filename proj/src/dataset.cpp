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

#include "pvedge/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include <fmt/core.h>

namespace pvedge {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return cells;
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

// Shortest text that parses back to the same double.
std::string format_number(double v) {
  if (std::isnan(v)) return {};
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double hour_fraction(std::chrono::sys_seconds utc, int offset_minutes) {
  using namespace std::chrono;
  const auto local = utc + minutes{offset_minutes};
  const auto since_midnight = local - floor<days>(local);
  // Snapped to a 2^-16 grid (about 1.3 s) so the value and every midpoint
  // between two values are exact in float32.
  const double frac = static_cast<double>(since_midnight.count()) / 86400.0;
  return std::ldexp(std::round(std::ldexp(frac, kHourFracBits)), -kHourFracBits);
}

}  // namespace

ParsedTimestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const auto fail = [&]() -> ParsedTimestamp {
    throw Error(ErrorKind::parse, fmt::format("invalid ISO-8601 timestamp '{}'", text));
  };
  text = trim(text);
  // YYYY-MM-DD?HH:MM
  if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
      text[13] != ':')
    return fail();
  int y, mo, d, h, mi, s = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), mo) ||
      !parse_int(text.substr(8, 2), d) || !parse_int(text.substr(11, 2), h) ||
      !parse_int(text.substr(14, 2), mi))
    return fail();
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (text.size() < pos + 3 || !parse_int(text.substr(pos + 1, 2), s)) return fail();
    pos += 3;
  }
  int offset = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if (sign == 'Z' && pos + 1 == text.size()) {
      offset = 0;
    } else if ((sign == '+' || sign == '-') && text.size() == pos + 6 && text[pos + 3] == ':') {
      int oh, om;
      if (!parse_int(text.substr(pos + 1, 2), oh) || !parse_int(text.substr(pos + 4, 2), om) || oh > 23 ||
          om > 59)
        return fail();
      offset = (sign == '-' ? -1 : 1) * (oh * 60 + om);
    } else {
      return fail();
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 60) return fail();
  const sys_seconds local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
  return {local - minutes{offset}, offset};
}

std::string format_timestamp(std::chrono::sys_seconds utc, int offset_minutes) {
  using namespace std::chrono;
  const sys_seconds local = utc + minutes{offset_minutes};
  const auto day_point = floor<days>(local);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{local - day_point};
  std::string zone = "Z";
  if (offset_minutes != 0) {
    const int a = std::abs(offset_minutes);
    zone = fmt::format("{}{:02}:{:02}", offset_minutes < 0 ? '-' : '+', a / 60, a % 60);
  }
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}{}", static_cast<int>(ymd.year()),
                     static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                     tod.hours().count(), tod.minutes().count(), tod.seconds().count(), zone);
}

InverterDataset read_csv(std::istream& in, double capacity, int inverter_id) {
  if (!(capacity > 0.0) || !std::isfinite(capacity))
    throw Error(ErrorKind::argument, fmt::format("capacity must be a positive kW value, got {}", capacity));

  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::empty_dataset, "CSV is empty (no header row)");
  const auto header = split_cells(line);
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) {
    if (c >= header.size())
      throw Error(ErrorKind::schema, fmt::format("header column {} missing: expected '{}'", c + 1, kCsvColumns[c]));
    std::string_view got = header[c];
    if (c == 0 && got.starts_with("\xEF\xBB\xBF")) got.remove_prefix(3);
    if (got != kCsvColumns[c])
      throw Error(ErrorKind::schema,
                  fmt::format("header column {}: expected '{}', found '{}'", c + 1, kCsvColumns[c], got));
  }
  if (header.size() != kCsvColumns.size())
    throw Error(ErrorKind::schema, fmt::format("header column {}: unexpected extra column '{}'",
                                               kCsvColumns.size() + 1, header[kCsvColumns.size()]));

  InverterDataset out;
  out.inverter_id = inverter_id;
  out.capacity = capacity;
  bool offset_seen = false;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    if (cells.size() != kCsvColumns.size())
      throw Error(ErrorKind::parse, fmt::format("line {}: expected {} cells, found {}", line_no,
                                                kCsvColumns.size(), cells.size()));
    SampleRecord rec;
    ParsedTimestamp ts;
    try {
      ts = parse_timestamp(cells[0]);
    } catch (const Error& e) {
      throw Error(ErrorKind::parse, fmt::format("line {}: {}", line_no, e.what()));
    }
    rec.timestamp = ts.utc;
    if (!offset_seen) {
      out.utc_offset_minutes = ts.offset_minutes;
      offset_seen = true;
    }
    double values[13];
    for (std::size_t c = 1; c < kCsvColumns.size(); ++c) {
      const std::string_view cell = cells[c];
      if (cell.empty()) {
        values[c - 1] = kNaN;
        continue;
      }
      double v;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
        throw Error(ErrorKind::parse, fmt::format("line {}: column '{}': cannot parse '{}'", line_no,
                                                  kCsvColumns[c], cell));
      values[c - 1] = v;
    }
    std::copy(values, values + 11, rec.features.begin());
    rec.features[kHourFrac] = hour_fraction(ts.utc, ts.offset_minutes);
    rec.active_power = values[11];
    rec.reactive_power = values[12];
    out.records.push_back(rec);
  }

  std::stable_sort(out.records.begin(), out.records.end(),
                   [](const SampleRecord& a, const SampleRecord& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 1; i < out.records.size(); ++i) {
    if (out.records[i].timestamp == out.records[i - 1].timestamp)
      throw Error(ErrorKind::duplicate_timestamp,
                  fmt::format("duplicate timestamp {}",
                              format_timestamp(out.records[i].timestamp, out.utc_offset_minutes)));
  }
  return out;
}

InverterDataset load_csv(const std::filesystem::path& path, double capacity, int inverter_id) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open '{}'", path.string()));
  return read_csv(in, capacity, inverter_id);
}

void write_csv(const InverterDataset& dataset, std::ostream& out) {
  for (std::size_t c = 0; c < kCsvColumns.size(); ++c) out << (c ? "," : "") << kCsvColumns[c];
  out << '\n';
  for (const auto& r : dataset.records) {
    out << format_timestamp(r.timestamp, dataset.utc_offset_minutes);
    for (std::size_t f = 0; f < kHourFrac; ++f) out << ',' << format_number(r.features[f]);
    out << ',' << format_number(r.active_power) << ',' << format_number(r.reactive_power) << '\n';
  }
}

void save_csv(const InverterDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write '{}'", path.string()));
  write_csv(dataset, out);
  if (!out) throw Error(ErrorKind::io, fmt::format("write to '{}' failed", path.string()));
}

bool is_physical(const SampleRecord& r, double capacity) {
  for (double v : r.features)
    if (!std::isfinite(v)) return false;
  if (!std::isfinite(r.active_power) || !std::isfinite(r.reactive_power)) return false;
  for (std::size_t f : {kVaRms, kVbRms, kVcRms})
    if (r.features[f] < 0.0 || r.features[f] > 400.0) return false;
  for (std::size_t f : {kIaRms, kIbRms, kIcRms})
    if (r.features[f] < 0.0) return false;
  if (r.features[kIrradiance] < 0.0 || r.features[kIrradiance] > 1500.0) return false;
  return std::abs(r.active_power) <= capacity && std::abs(r.reactive_power) <= capacity;
}

InverterDataset clean(const InverterDataset& dataset) {
  InverterDataset out = dataset;
  out.records.clear();
  out.records.reserve(dataset.records.size());

  FeatureVector last{};
  std::array<bool, kFeatureCount> have{};
  for (SampleRecord rec : dataset.records) {
    bool fillable = true;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      if (std::isnan(rec.features[f])) {
        if (have[f])
          rec.features[f] = last[f];
        else
          fillable = false;
      } else {
        last[f] = rec.features[f];
        have[f] = true;
      }
    }
    if (!fillable) continue;
    if (std::isnan(rec.active_power) || std::isnan(rec.reactive_power)) continue;
    if (!is_physical(rec, dataset.capacity)) continue;
    out.records.push_back(rec);
  }
  if (out.records.empty())
    throw Error(ErrorKind::empty_dataset, "no records survive cleaning");
  return out;
}

SplitDataset split(const InverterDataset& dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error(ErrorKind::argument, fmt::format("train_fraction must lie in (0,1), got {}", train_fraction));
  const std::size_t n = dataset.records.size();
  if (n == 0) throw Error(ErrorKind::empty_dataset, "cannot split an empty dataset");

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);

  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n)));
  SplitDataset out;
  out.seed = seed;
  out.train_fraction = train_fraction;
  out.train.reserve(n_train);
  out.test.reserve(n - n_train);
  for (std::size_t i = 0; i < n; ++i)
    (i < n_train ? out.train : out.test).push_back(dataset.records[perm[i]]);
  return out;
}

// The generator is a small physical caricature of a rooftop inverter on a weak
// rural feeder: irradiance drives available power, which is clipped at the AC
// rating; export raises the terminal voltage, a volt-var curve absorbs
// reactive power above a threshold, and active power is curtailed near the
// upper voltage limit. All outputs are quantized to sensor resolution.
InverterDataset synth_generate(const SynthOptions& opt) {
  using namespace std::chrono;
  if (opt.n_days < 1) throw Error(ErrorKind::argument, "n_days must be >= 1");
  if (!(opt.capacity > 0.0) || !std::isfinite(opt.capacity))
    throw Error(ErrorKind::argument, fmt::format("capacity must be positive, got {}", opt.capacity));

  const double cap = opt.capacity;
  Rng rng(opt.seed);
  // Sensor channels report ADC counts: multiples of 2^-bits, exact in float32.
  const auto adc = [](double v, int bits) { return std::ldexp(std::round(std::ldexp(v, bits)), -bits); };
  // Meter readings at `decimals` places, on the double nearest the decimal.
  const auto quant = [](double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
  };

  // Site constants.
  const double v_base = 224.0 + 4.0 * rng.uniform();
  const double rise_per_cap = 11.0 + 4.0 * rng.uniform();   // V at full export
  const double sag_per_qcap = 9.0 + 3.0 * rng.uniform();    // V per unit absorbed Q
  const double dc_ac_ratio = 1.12 + 0.2 * rng.uniform();
  const double vv_start = v_base + 3.0 + 2.0 * rng.uniform();
  const double vv_span = 6.0 + 2.0 * rng.uniform();
  const double vv_low = v_base - 2.0;
  const double curtail_v = 242.0;
  const std::array<double, 3> phase_offset = {1.5 * rng.normal(), 1.5 * rng.normal(), 1.5 * rng.normal()};

  InverterDataset ds;
  ds.inverter_id = opt.inverter_id;
  ds.capacity = cap;
  ds.utc_offset_minutes = opt.utc_offset_minutes;
  ds.records.reserve(static_cast<std::size_t>(opt.n_days) * kSlotsPerDay);

  double cloud_state = 0.0;
  double wind_state = 0.0;
  double grid_state = 0.0;
  for (unsigned d = 0; d < opt.n_days; ++d) {
    const double clearness = 0.55 + 0.45 * rng.uniform();
    const double temp_offset = 2.0 * rng.normal();
    const sys_seconds local_midnight{sys_days{opt.start_day} + days{d}};
    for (int s = 0; s < kSlotsPerDay; ++s) {
      const double hour = s / 4.0;
      cloud_state = 0.92 * cloud_state + 0.39 * rng.normal();
      wind_state = 0.9 * wind_state + 0.43 * rng.normal();
      grid_state = 0.8 * grid_state + 0.6 * rng.normal();

      const bool daylight = hour > kSunriseHour && hour < kSunsetHour;
      const double envelope =
          daylight ? std::sin(std::numbers::pi * (hour - kSunriseHour) / (kSunsetHour - kSunriseHour)) : 0.0;
      const double cloud = std::clamp(clearness + 0.25 * std::tanh(cloud_state), 0.05, 1.0);

      double irr = daylight ? 1000.0 * envelope * cloud * (1.0 + 0.01 * rng.normal()) : 0.0;
      irr = adc(std::clamp(irr, 0.0, 1400.0), 3);
      const double t_amb =
          adc(20.0 + 7.0 * std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0) + temp_offset +
                    0.3 * rng.normal(),
                6);
      const double t_mod = adc(t_amb + 0.028 * irr + 0.3 * rng.normal(), 6);
      const double humidity = adc(std::clamp(75.0 - 2.0 * (t_amb - 20.0) + 3.0 * rng.normal(), 15.0, 100.0), 4);
      const double wind = adc(std::abs(2.5 + 1.2 * wind_state), 7);

      const double p_dc = cap * dc_ac_ratio * (irr / 1000.0) * (1.0 - 0.004 * (t_mod - 25.0));
      const double p_avail = std::clamp(p_dc, 0.0, cap);

      const double load = 0.5 + 0.5 * std::exp(-std::pow((hour - 19.5) / 1.5, 2)) +
                          0.3 * std::exp(-std::pow((hour - 7.5) / 1.2, 2));
      const double v_grid = v_base - 3.0 * load + 0.5 * grid_state;
      const double v_pre = v_grid + rise_per_cap * p_avail / cap;

      double q = 0.0;
      if (v_pre > vv_start) q = -0.44 * cap * std::clamp((v_pre - vv_start) / vv_span, 0.0, 1.0);
      else if (v_pre < vv_low) q = 0.3 * cap * std::clamp((vv_low - v_pre) / 4.0, 0.0, 1.0);
      double p = p_avail;
      // Reactive priority inside the kVA rating.
      if (p * p + q * q > cap * cap) p = std::sqrt(cap * cap - q * q);
      if (v_pre > curtail_v) p = std::max(0.0, p - 0.08 * cap * (v_pre - curtail_v));

      if (daylight && p > 0.0) p += 0.005 * cap * rng.normal();
      else p = 0.0;
      q += 0.002 * cap * rng.normal();
      p = quant(std::clamp(p, 0.0, cap), 3);
      q = quant(std::clamp(q, -cap, cap), 3);

      const double v_term = v_grid + rise_per_cap * p / cap + sag_per_qcap * q / cap;
      const double s_kva = std::sqrt(p * p + q * q);

      SampleRecord rec;
      rec.timestamp = local_midnight + minutes{15 * s} - minutes{opt.utc_offset_minutes};
      for (std::size_t ph = 0; ph < 3; ++ph) {
        const double v = adc(v_term + phase_offset[ph] + 0.3 * rng.normal(), 6);
        const double i = 1000.0 * s_kva / (3.0 * v) * (1.0 + 0.01 * rng.normal()) + 0.05 + 0.01 * std::abs(rng.normal());
        rec.features[kVaRms + ph] = v;
        rec.features[kIaRms + ph] = adc(std::max(0.0, i), 10);
      }
      rec.features[kIrradiance] = irr;
      rec.features[kAmbientTemp] = t_amb;
      rec.features[kModuleTemp] = t_mod;
      rec.features[kHumidity] = humidity;
      rec.features[kWindSpeed] = wind;
      rec.features[kHourFrac] = hour_fraction(rec.timestamp, opt.utc_offset_minutes);
      rec.active_power = p;
      rec.reactive_power = q;
      ds.records.push_back(rec);
    }
  }
  return ds;
}

InverterDataset synth_generate(unsigned n_days, double capacity, std::uint64_t seed) {
  SynthOptions opt;
  opt.n_days = n_days;
  opt.capacity = capacity;
  opt.seed = seed;
  return synth_generate(opt);
}

std::vector<FeatureVector> feature_rows(const std::vector<SampleRecord>& records) {
  std::vector<FeatureVector> rows;
  rows.reserve(records.size());
  for (const auto& r : records) rows.push_back(r.features);
  return rows;
}

std::vector<double> labels(const std::vector<SampleRecord>& records, Target target) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.label(target));
  return out;
}

}  // namespace pvedge
