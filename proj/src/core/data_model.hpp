#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/calendar.hpp"

namespace emsf::data {

using cal::DayStamp;
using cal::HourStamp;

enum class RegionId { Plain, Metropolitan, Lakes, Alps };

std::string_view region_name(RegionId id);
RegionId parse_region(std::string_view name);

struct ProvinceShare {
    std::string province;
    double weight = 0.0;  // share of calls originating in the province
};

struct Region {
    RegionId id = RegionId::Plain;
    std::vector<ProvinceShare> provinces;

    double weight_of(std::string_view province) const;  // 0 when absent
};

// Weights non-negative and summing to 1 within 1e-9.
void validate_region(const Region& region);

struct RegionTable {
    std::vector<Region> regions;

    const Region& find(RegionId id) const;
};

// Sectioned text format:
//   [Plain]
//   province,weight
//   PV,0.4
// Validates each region and that no province belongs to two regions.
RegionTable parse_region_weights(std::string_view content, const std::string& source = "regions");
std::string format_region_weights(const RegionTable& table);

// Contiguous hourly counts; counts[i] belongs to hour start + i.
struct EventSeries {
    RegionId region = RegionId::Plain;
    HourStamp start = 0;
    std::vector<std::int64_t> counts;

    HourStamp end() const { return start + static_cast<HourStamp>(counts.size()) - 1; }
};

// Parses events.csv (`region,timestamp,count`). Rows may be unsorted; rows of
// other regions are skipped; duplicate hours are summed; absent hours are 0.
// Without a region filter the file must contain exactly one region.
EventSeries ingest_events(std::string_view content, std::optional<RegionId> region = std::nullopt,
                          const std::string& source = "events.csv");
std::string format_events(const EventSeries& series);

// Daily totals over the complete days of the series.
struct DailyCounts {
    DayStamp start = 0;
    std::vector<double> totals;
};
DailyCounts daily_totals(const EventSeries& series);

// Hourly station record; missing hours are flagged, their values are 0.
struct WeatherSeries {
    std::string station_id;
    std::string province;
    HourStamp start = 0;
    std::vector<double> temp_c;
    std::vector<double> rain_mm;
    std::vector<double> snow_mm;
    std::vector<std::uint8_t> temp_missing;
    std::vector<std::uint8_t> rain_missing;
    std::vector<std::uint8_t> snow_missing;

    std::size_t size() const { return temp_c.size(); }
    HourStamp end() const { return start + static_cast<HourStamp>(temp_c.size()) - 1; }
};

// Parses weather.csv (`station,province,timestamp,temp_c,rain_mm,snow_mm`).
// Empty fields are missing; hours without a row are missing. Duplicate
// timestamps within a station are rejected. Stations come back sorted by id.
std::vector<WeatherSeries> ingest_weather(std::string_view content,
                                          const std::string& source = "weather.csv");
std::string format_weather(const std::vector<WeatherSeries>& stations);

struct DailySeries {
    DayStamp start = 0;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;

    std::size_t size() const { return values.size(); }
    DayStamp end() const { return start + static_cast<DayStamp>(values.size()) - 1; }
    bool covers(DayStamp d) const { return d >= start && d <= end(); }
    std::optional<double> at(DayStamp d) const;
};

struct WeatherOptions {
    // Interior gaps of at most this many hours are linearly interpolated
    // within each station before aggregation.
    int max_interpolated_gap = 6;
};

// Fills interior temperature gaps of at most `max_gap` hours.
std::vector<std::uint8_t> interpolate_short_gaps(std::vector<double>& values,
                                                 std::vector<std::uint8_t> missing, int max_gap);

struct WeightedStation {
    const WeatherSeries* station;
    double weight;
};

// Hourly weighted mean over the stations present in each hour (weights
// renormalized over present stations), then the mean over present hours of
// each day. A day with no present hour, or touched by an all-missing run
// longer than the interpolation limit, is flagged missing; an all-missing run
// longer than 24 hours is an error.
DailySeries aggregate_weighted(const std::vector<WeightedStation>& stations,
                               const WeatherOptions& options = {});

// Region-level daily temperature: each station carries its province's call
// share divided by the number of stations in that province.
DailySeries aggregate_weather(const std::vector<WeatherSeries>& stations, const Region& region,
                              const WeatherOptions& options = {});

struct CovidSeries {
    DayStamp start = 0;
    std::vector<std::string> provinces;
    // total_positive[p][d] for province p on day start + d.
    std::vector<std::vector<std::int64_t>> total_positive;

    std::size_t days() const { return total_positive.empty() ? 0 : total_positive.front().size(); }
    DayStamp end() const { return start + static_cast<DayStamp>(days()) - 1; }
    // Sum over all provinces, i.e. the regional cumulative count.
    std::vector<std::int64_t> regional_totals() const;
};

// Parses covid.csv (`date,province,total_positive`). Every province must
// cover the same contiguous date range; negative totals are rejected.
CovidSeries ingest_covid(std::string_view content, const std::string& source = "covid.csv");
std::string format_covid(const CovidSeries& covid);

struct FluWeek {
    int year = 0;
    int week = 0;
    double incidence = 0.0;  // cases per 1000
};

struct FluSeries {
    std::vector<FluWeek> weeks;  // sorted by (year, week)
};

// Parses flu.csv (`year,week,incidence`) and validates one record per week
// and contiguous weeks within each surveillance season (weeks 27..52/53 of
// year Y and 1..26 of Y+1 form season Y).
FluSeries ingest_flu(std::string_view content, const std::string& source = "flu.csv");
std::string format_flu(const FluSeries& flu);
void validate_flu(const FluSeries& flu);

// Thursday of the ISO week.
DayStamp iso_week_midpoint(int year, int week);

// Each week's value sits on its midpoint day; days between midpoints of the
// same season are linearly interpolated, days of the season's first and last
// week outside the midpoints hold the nearest midpoint value, and days outside
// every season are 0. The result spans the Monday of the first week to the
// Sunday of the last.
DailySeries interpolate_flu(const FluSeries& flu);

struct HourRange {
    HourStamp first = 0;
    HourStamp last = 0;  // inclusive
};

struct SourceCoverage {
    std::string name;
    HourRange span;
    std::vector<HourRange> missing;
};

SourceCoverage coverage_of(const EventSeries& events);
SourceCoverage coverage_of(const DailySeries& daily, std::string name);

struct AlignmentReport {
    HourRange common;
    // Missing ranges of each source clipped to the common span.
    std::vector<SourceCoverage> sources;
};

AlignmentReport validate_alignment(const std::vector<SourceCoverage>& sources);
std::string format_alignment(const AlignmentReport& report);

}  // namespace emsf::data
