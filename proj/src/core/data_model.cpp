#include "core/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "core/error.hpp"
#include "core/text.hpp"

namespace emsf::data {

namespace {

constexpr std::string_view kRegionNames[] = {"Plain", "Metropolitan", "Lakes", "Alps"};

template <class F>
auto at_line(const text::CsvReader& reader, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ParseError& e) {
        reader.fail(e.what());
    }
}

}  // namespace

std::string_view region_name(RegionId id) { return kRegionNames[static_cast<int>(id)]; }

RegionId parse_region(std::string_view name) {
    for (int i = 0; i < 4; ++i) {
        if (name == kRegionNames[i]) return static_cast<RegionId>(i);
    }
    throw ConfigError("unknown region '" + std::string(name) +
                      "' (expected Plain, Metropolitan, Lakes or Alps)");
}

double Region::weight_of(std::string_view province) const {
    for (const auto& p : provinces) {
        if (p.province == province) return p.weight;
    }
    return 0.0;
}

void validate_region(const Region& region) {
    if (region.provinces.empty()) {
        throw ValidationError("region " + std::string(region_name(region.id)) + " has no provinces");
    }
    double sum = 0.0;
    std::set<std::string> seen;
    for (const auto& p : region.provinces) {
        if (!(p.weight >= 0.0) || p.weight > 1.0) {
            throw ValidationError("province " + p.province + " has weight outside [0,1]");
        }
        if (!seen.insert(p.province).second) {
            throw ValidationError("province " + p.province + " listed twice in region " +
                                  std::string(region_name(region.id)));
        }
        sum += p.weight;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ValidationError("weights of region " + std::string(region_name(region.id)) +
                              " sum to " + text::format_double(sum) + ", expected 1");
    }
}

const Region& RegionTable::find(RegionId id) const {
    for (const auto& r : regions) {
        if (r.id == id) return r;
    }
    throw ConfigError("region " + std::string(region_name(id)) + " not present in weights file");
}

RegionTable parse_region_weights(std::string_view content, const std::string& source) {
    RegionTable table;
    std::size_t line_no = 0;
    Region* current = nullptr;
    bool expect_header = false;
    while (!content.empty()) {
        const auto pos = content.find('\n');
        const auto raw = pos == std::string_view::npos ? content : content.substr(0, pos);
        content = pos == std::string_view::npos ? std::string_view{} : content.substr(pos + 1);
        ++line_no;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(source, line_no, "unterminated section header");
            Region r;
            try {
                r.id = parse_region(text::trim(line.substr(1, line.size() - 2)));
            } catch (const ConfigError& e) {
                throw ParseError(source, line_no, e.what());
            }
            for (const auto& existing : table.regions) {
                if (existing.id == r.id) throw ParseError(source, line_no, "duplicate region section");
            }
            table.regions.push_back(r);
            current = &table.regions.back();
            expect_header = true;
            continue;
        }
        if (current == nullptr) throw ParseError(source, line_no, "province line before any [Region]");
        const auto fields = text::split(line);
        if (expect_header) {
            expect_header = false;
            if (fields.size() == 2 && fields[0] == "province" && fields[1] == "weight") continue;
        }
        if (fields.size() != 2) throw ParseError(source, line_no, "expected 'province,weight'");
        ProvinceShare share;
        share.province = std::string(fields[0]);
        try {
            share.weight = text::parse_double(fields[1]);
        } catch (const ParseError& e) {
            throw ParseError(source, line_no, e.what());
        }
        current->provinces.push_back(share);
    }
    std::map<std::string, RegionId> owner;
    for (const auto& r : table.regions) {
        validate_region(r);
        for (const auto& p : r.provinces) {
            const auto [it, inserted] = owner.emplace(p.province, r.id);
            if (!inserted) {
                throw ValidationError("province " + p.province + " belongs to both " +
                                      std::string(region_name(it->second)) + " and " +
                                      std::string(region_name(r.id)));
            }
        }
    }
    return table;
}

std::string format_region_weights(const RegionTable& table) {
    std::string out;
    for (const auto& r : table.regions) {
        out += "[" + std::string(region_name(r.id)) + "]\nprovince,weight\n";
        for (const auto& p : r.provinces) out += p.province + "," + text::format_double(p.weight) + "\n";
    }
    return out;
}

EventSeries ingest_events(std::string_view content, std::optional<RegionId> region,
                          const std::string& source) {
    text::CsvReader reader(content, source);
    reader.expect_header({"region", "timestamp", "count"});
    std::map<HourStamp, std::int64_t> by_hour;
    std::optional<RegionId> seen;
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        if (f.size() != 3) reader.fail("expected 3 fields, got " + std::to_string(f.size()));
        const RegionId r = at_line(reader, [&] {
            try {
                return parse_region(f[0]);
            } catch (const ConfigError& e) {
                throw ParseError(e.what());
            }
        });
        if (region && r != *region) continue;
        if (!region && seen && *seen != r) {
            reader.fail("file mixes regions; select one region explicitly");
        }
        seen = r;
        const HourStamp h = at_line(reader, [&] { return cal::parse_hour(f[1]); });
        const long long c = at_line(reader, [&] { return text::parse_int(f[2]); });
        if (c < 0) {
            throw ValidationError(source + ":" + std::to_string(reader.line()) +
                                  ": negative count " + std::to_string(c));
        }
        by_hour[h] += c;
    }
    if (by_hour.empty()) {
        throw ValidationError(source + ": no event rows" +
                              (region ? " for region " + std::string(region_name(*region)) : ""));
    }
    EventSeries s;
    s.region = region ? *region : *seen;
    s.start = by_hour.begin()->first;
    s.counts.assign(static_cast<std::size_t>(by_hour.rbegin()->first - s.start + 1), 0);
    for (const auto& [h, c] : by_hour) s.counts[static_cast<std::size_t>(h - s.start)] = c;
    return s;
}

std::string format_events(const EventSeries& series) {
    std::string out = "region,timestamp,count\n";
    const std::string name(region_name(series.region));
    for (std::size_t i = 0; i < series.counts.size(); ++i) {
        out += name + "," + cal::format_hour(series.start + static_cast<HourStamp>(i)) + "," +
               std::to_string(series.counts[i]) + "\n";
    }
    return out;
}

DailyCounts daily_totals(const EventSeries& series) {
    DayStamp first = cal::day_of(series.start);
    if (cal::hour_of(series.start) != 0) ++first;
    DayStamp last = cal::day_of(series.end());
    if (cal::hour_of(series.end()) != 23) --last;
    DailyCounts out;
    out.start = first;
    for (DayStamp d = first; d <= last; ++d) {
        double sum = 0.0;
        const auto base = static_cast<std::size_t>(cal::first_hour(d) - series.start);
        for (std::size_t h = 0; h < 24; ++h) sum += static_cast<double>(series.counts[base + h]);
        out.totals.push_back(sum);
    }
    return out;
}

std::vector<WeatherSeries> ingest_weather(std::string_view content, const std::string& source) {
    text::CsvReader reader(content, source);
    reader.expect_header({"station", "province", "timestamp", "temp_c", "rain_mm", "snow_mm"});
    struct Row {
        double v[3];
        bool missing[3];
    };
    struct Station {
        std::string province;
        std::map<HourStamp, Row> rows;
    };
    std::map<std::string, Station> stations;
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        if (f.size() != 6) reader.fail("expected 6 fields, got " + std::to_string(f.size()));
        if (f[0].empty()) reader.fail("empty station id");
        auto& st = stations[std::string(f[0])];
        if (st.rows.empty() && st.province.empty()) st.province = std::string(f[1]);
        if (st.province != f[1]) reader.fail("station changes province");
        const HourStamp h = at_line(reader, [&] { return cal::parse_hour(f[2]); });
        Row row{};
        for (int k = 0; k < 3; ++k) {
            row.missing[k] = f[3 + k].empty() || f[3 + k] == "NA";
            row.v[k] = row.missing[k] ? 0.0 : at_line(reader, [&] { return text::parse_double(f[3 + k]); });
        }
        if (!st.rows.emplace(h, row).second) {
            throw ValidationError(source + ":" + std::to_string(reader.line()) + ": duplicate timestamp " +
                                  cal::format_hour(h) + " for station " + std::string(f[0]));
        }
    }
    std::vector<WeatherSeries> out;
    for (auto& [id, st] : stations) {
        WeatherSeries ws;
        ws.station_id = id;
        ws.province = st.province;
        ws.start = st.rows.begin()->first;
        const auto n = static_cast<std::size_t>(st.rows.rbegin()->first - ws.start + 1);
        ws.temp_c.assign(n, 0.0);
        ws.rain_mm.assign(n, 0.0);
        ws.snow_mm.assign(n, 0.0);
        ws.temp_missing.assign(n, 1);
        ws.rain_missing.assign(n, 1);
        ws.snow_missing.assign(n, 1);
        for (const auto& [h, row] : st.rows) {
            const auto i = static_cast<std::size_t>(h - ws.start);
            ws.temp_c[i] = row.v[0];
            ws.rain_mm[i] = row.v[1];
            ws.snow_mm[i] = row.v[2];
            ws.temp_missing[i] = row.missing[0];
            ws.rain_missing[i] = row.missing[1];
            ws.snow_missing[i] = row.missing[2];
        }
        out.push_back(std::move(ws));
    }
    return out;
}

std::string format_weather(const std::vector<WeatherSeries>& stations) {
    std::string out = "station,province,timestamp,temp_c,rain_mm,snow_mm\n";
    for (const auto& s : stations) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            out += s.station_id + "," + s.province + "," +
                   cal::format_hour(s.start + static_cast<HourStamp>(i)) + ",";
            out += (s.temp_missing[i] ? "" : text::format_fixed(s.temp_c[i], 2)) + ",";
            out += (s.rain_missing[i] ? "" : text::format_fixed(s.rain_mm[i], 2)) + ",";
            out += (s.snow_missing[i] ? "" : text::format_fixed(s.snow_mm[i], 2)) + "\n";
        }
    }
    return out;
}

std::optional<double> DailySeries::at(DayStamp d) const {
    if (!covers(d)) return std::nullopt;
    const auto i = static_cast<std::size_t>(d - start);
    if (missing[i]) return std::nullopt;
    return values[i];
}

std::vector<std::uint8_t> interpolate_short_gaps(std::vector<double>& values,
                                                 std::vector<std::uint8_t> missing, int max_gap) {
    const std::size_t n = values.size();
    std::size_t i = 0;
    while (i < n) {
        if (!missing[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && missing[j]) ++j;
        const std::size_t len = j - i;
        if (i > 0 && j < n && len <= static_cast<std::size_t>(max_gap)) {
            const double a = values[i - 1], b = values[j];
            for (std::size_t k = i; k < j; ++k) {
                const double t = static_cast<double>(k - i + 1) / static_cast<double>(len + 1);
                values[k] = a + t * (b - a);
                missing[k] = 0;
            }
        }
        i = j;
    }
    return missing;
}

DailySeries aggregate_weighted(const std::vector<WeightedStation>& stations,
                               const WeatherOptions& options) {
    if (stations.empty()) throw ValidationError("no weather stations to aggregate");
    struct Filled {
        const WeatherSeries* s;
        double w;
        std::vector<double> temp;
        std::vector<std::uint8_t> missing;
    };
    std::vector<Filled> filled;
    HourStamp first = stations.front().station->start, last = stations.front().station->end();
    for (const auto& ws : stations) {
        if (!(ws.weight >= 0.0)) throw ValidationError("negative station weight");
        Filled fl{ws.station, ws.weight, ws.station->temp_c, {}};
        fl.missing = interpolate_short_gaps(fl.temp, ws.station->temp_missing, options.max_interpolated_gap);
        filled.push_back(std::move(fl));
        first = std::min(first, ws.station->start);
        last = std::max(last, ws.station->end());
    }

    const auto n_hours = static_cast<std::size_t>(last - first + 1);
    std::vector<double> hourly(n_hours, 0.0);
    std::vector<std::uint8_t> hourly_missing(n_hours, 1);
    for (std::size_t i = 0; i < n_hours; ++i) {
        const HourStamp h = first + static_cast<HourStamp>(i);
        double num = 0.0, den = 0.0;
        for (const auto& fl : filled) {
            if (h < fl.s->start || h > fl.s->end() || fl.w <= 0.0) continue;
            const auto k = static_cast<std::size_t>(h - fl.s->start);
            if (fl.missing[k]) continue;
            num += fl.w * fl.temp[k];
            den += fl.w;
        }
        if (den > 0.0) {
            hourly[i] = num / den;
            hourly_missing[i] = 0;
        }
    }

    DailySeries out;
    out.start = cal::day_of(first);
    const DayStamp last_day = cal::day_of(last);
    out.values.assign(static_cast<std::size_t>(last_day - out.start + 1), 0.0);
    out.missing.assign(out.values.size(), 0);
    for (DayStamp d = out.start; d <= last_day; ++d) {
        double sum = 0.0;
        int present = 0;
        for (int hh = 0; hh < 24; ++hh) {
            const HourStamp h = cal::first_hour(d) + hh;
            if (h < first || h > last) continue;
            const auto i = static_cast<std::size_t>(h - first);
            if (!hourly_missing[i]) {
                sum += hourly[i];
                ++present;
            }
        }
        const auto di = static_cast<std::size_t>(d - out.start);
        if (present == 0) {
            out.missing[di] = 1;
        } else {
            out.values[di] = sum / present;
        }
    }

    // Missing runs: > 24 h is an error, > max gap flags every day it touches.
    std::size_t i = 0;
    while (i < n_hours) {
        if (!hourly_missing[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n_hours && hourly_missing[j]) ++j;
        const std::size_t len = j - i;
        const HourStamp a = first + static_cast<HourStamp>(i), b = first + static_cast<HourStamp>(j) - 1;
        if (len > 24) {
            throw ValidationError("all weather stations missing for " + std::to_string(len) +
                                  " consecutive hours: " + cal::format_hour(a) + " to " + cal::format_hour(b));
        }
        if (len > static_cast<std::size_t>(options.max_interpolated_gap)) {
            for (DayStamp d = cal::day_of(a); d <= cal::day_of(b); ++d) {
                out.missing[static_cast<std::size_t>(d - out.start)] = 1;
            }
        }
        i = j;
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (out.missing[k]) out.values[k] = 0.0;
    }
    return out;
}

DailySeries aggregate_weather(const std::vector<WeatherSeries>& stations, const Region& region,
                              const WeatherOptions& options) {
    validate_region(region);
    std::vector<WeightedStation> weighted;
    for (const auto& p : region.provinces) {
        if (p.weight <= 0.0) continue;
        std::vector<const WeatherSeries*> in_province;
        for (const auto& s : stations) {
            if (s.province == p.province) in_province.push_back(&s);
        }
        if (in_province.empty()) {
            throw ValidationError("no weather station for province " + p.province + " of region " +
                                  std::string(region_name(region.id)));
        }
        for (const auto* s : in_province) {
            weighted.push_back({s, p.weight / static_cast<double>(in_province.size())});
        }
    }
    return aggregate_weighted(weighted, options);
}

std::vector<std::int64_t> CovidSeries::regional_totals() const {
    std::vector<std::int64_t> out(days(), 0);
    for (const auto& p : total_positive) {
        for (std::size_t d = 0; d < out.size(); ++d) out[d] += p[d];
    }
    return out;
}

CovidSeries ingest_covid(std::string_view content, const std::string& source) {
    text::CsvReader reader(content, source);
    reader.expect_header({"date", "province", "total_positive"});
    std::map<std::string, std::map<DayStamp, std::int64_t>> rows;
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        if (f.size() != 3) reader.fail("expected 3 fields, got " + std::to_string(f.size()));
        const DayStamp d = at_line(reader, [&] { return cal::parse_day(f[0]); });
        const long long v = at_line(reader, [&] { return text::parse_int(f[2]); });
        if (v < 0) {
            throw ValidationError(source + ":" + std::to_string(reader.line()) + ": negative total_positive");
        }
        if (!rows[std::string(f[1])].emplace(d, v).second) {
            reader.fail("duplicate date for province " + std::string(f[1]));
        }
    }
    if (rows.empty()) throw ValidationError(source + ": no rows");
    CovidSeries out;
    const auto& first_map = rows.begin()->second;
    out.start = first_map.begin()->first;
    const DayStamp end = first_map.rbegin()->first;
    for (const auto& [prov, by_day] : rows) {
        if (by_day.begin()->first != out.start || by_day.rbegin()->first != end ||
            static_cast<DayStamp>(by_day.size()) != end - out.start + 1) {
            throw ValidationError(source + ": dates of province " + prov +
                                  " are not contiguous over the common period " +
                                  cal::format_day(out.start) + " to " + cal::format_day(end));
        }
        out.provinces.push_back(prov);
        std::vector<std::int64_t> v;
        v.reserve(by_day.size());
        for (const auto& [d, c] : by_day) v.push_back(c);
        out.total_positive.push_back(std::move(v));
    }
    return out;
}

std::string format_covid(const CovidSeries& covid) {
    std::string out = "date,province,total_positive\n";
    for (std::size_t d = 0; d < covid.days(); ++d) {
        for (std::size_t p = 0; p < covid.provinces.size(); ++p) {
            out += cal::format_day(covid.start + static_cast<DayStamp>(d)) + "," + covid.provinces[p] +
                   "," + std::to_string(covid.total_positive[p][d]) + "\n";
        }
    }
    return out;
}

DayStamp iso_week_midpoint(int year, int week) { return cal::iso_week_monday(year, week) + 3; }

namespace {

int season_of(const FluWeek& w) { return w.week >= 27 ? w.year : w.year - 1; }

}  // namespace

void validate_flu(const FluSeries& flu) {
    if (flu.weeks.size() < 2) throw ValidationError("flu series needs at least 2 weeks");
    for (std::size_t i = 0; i < flu.weeks.size(); ++i) {
        const auto& w = flu.weeks[i];
        if (w.week < 1 || w.week > cal::iso_weeks_in_year(w.year)) {
            throw ValidationError("invalid ISO week " + std::to_string(w.year) + "-W" + std::to_string(w.week));
        }
        if (!(w.incidence >= 0.0)) throw ValidationError("negative or non-finite flu incidence");
        if (i == 0) continue;
        const auto& p = flu.weeks[i - 1];
        const DayStamp gap = cal::iso_week_monday(w.year, w.week) - cal::iso_week_monday(p.year, p.week);
        if (gap == 0) {
            throw ValidationError("duplicate flu record for " + std::to_string(w.year) + "-W" +
                                  std::to_string(w.week));
        }
        if (season_of(w) == season_of(p) && gap != 7) {
            throw ValidationError("flu weeks not contiguous inside season " + std::to_string(season_of(w)) +
                                  ": " + std::to_string(p.year) + "-W" + std::to_string(p.week) + " then " +
                                  std::to_string(w.year) + "-W" + std::to_string(w.week));
        }
    }
}

FluSeries ingest_flu(std::string_view content, const std::string& source) {
    text::CsvReader reader(content, source);
    reader.expect_header({"year", "week", "incidence"});
    FluSeries flu;
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        if (f.size() != 3) reader.fail("expected 3 fields, got " + std::to_string(f.size()));
        FluWeek w;
        w.year = static_cast<int>(at_line(reader, [&] { return text::parse_int(f[0]); }));
        w.week = static_cast<int>(at_line(reader, [&] { return text::parse_int(f[1]); }));
        w.incidence = at_line(reader, [&] { return text::parse_double(f[2]); });
        flu.weeks.push_back(w);
    }
    std::stable_sort(flu.weeks.begin(), flu.weeks.end(), [](const FluWeek& a, const FluWeek& b) {
        return a.year != b.year ? a.year < b.year : a.week < b.week;
    });
    validate_flu(flu);
    return flu;
}

std::string format_flu(const FluSeries& flu) {
    std::string out = "year,week,incidence\n";
    for (const auto& w : flu.weeks) {
        out += std::to_string(w.year) + "," + std::to_string(w.week) + "," + text::format_fixed(w.incidence, 4) + "\n";
    }
    return out;
}

DailySeries interpolate_flu(const FluSeries& flu) {
    validate_flu(flu);
    DailySeries out;
    out.start = cal::iso_week_monday(flu.weeks.front().year, flu.weeks.front().week);
    const DayStamp end = cal::iso_week_monday(flu.weeks.back().year, flu.weeks.back().week) + 6;
    out.values.assign(static_cast<std::size_t>(end - out.start + 1), 0.0);
    out.missing.assign(out.values.size(), 0);

    std::size_t i = 0;
    while (i < flu.weeks.size()) {
        std::size_t j = i + 1;
        while (j < flu.weeks.size() && season_of(flu.weeks[j]) == season_of(flu.weeks[i])) ++j;
        // Season occupies weeks [i, j).
        const DayStamp season_first = cal::iso_week_monday(flu.weeks[i].year, flu.weeks[i].week);
        const DayStamp season_last = cal::iso_week_monday(flu.weeks[j - 1].year, flu.weeks[j - 1].week) + 6;
        for (DayStamp d = season_first; d <= season_last; ++d) {
            double v = 0.0;
            const DayStamp m_first = iso_week_midpoint(flu.weeks[i].year, flu.weeks[i].week);
            const DayStamp m_last = iso_week_midpoint(flu.weeks[j - 1].year, flu.weeks[j - 1].week);
            if (d <= m_first) {
                v = flu.weeks[i].incidence;
            } else if (d >= m_last) {
                v = flu.weeks[j - 1].incidence;
            } else {
                const auto k = i + static_cast<std::size_t>((d - m_first) / 7);
                const DayStamp m = iso_week_midpoint(flu.weeks[k].year, flu.weeks[k].week);
                const double t = static_cast<double>(d - m) / 7.0;
                v = flu.weeks[k].incidence + t * (flu.weeks[k + 1].incidence - flu.weeks[k].incidence);
            }
            out.values[static_cast<std::size_t>(d - out.start)] = v;
        }
        i = j;
    }
    return out;
}

SourceCoverage coverage_of(const EventSeries& events) {
    return {"events", {events.start, events.end()}, {}};
}

SourceCoverage coverage_of(const DailySeries& daily, std::string name) {
    SourceCoverage c;
    c.name = std::move(name);
    c.span = {cal::first_hour(daily.start), cal::first_hour(daily.end()) + 23};
    std::size_t i = 0;
    while (i < daily.size()) {
        if (!daily.missing[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < daily.size() && daily.missing[j]) ++j;
        c.missing.push_back({cal::first_hour(daily.start + static_cast<DayStamp>(i)),
                             cal::first_hour(daily.start + static_cast<DayStamp>(j) - 1) + 23});
        i = j;
    }
    return c;
}

AlignmentReport validate_alignment(const std::vector<SourceCoverage>& sources) {
    if (sources.empty()) throw ValidationError("alignment needs at least one source");
    AlignmentReport report;
    report.common = sources.front().span;
    for (const auto& s : sources) {
        report.common.first = std::max(report.common.first, s.span.first);
        report.common.last = std::min(report.common.last, s.span.last);
    }
    if (report.common.first > report.common.last) {
        std::string names;
        for (const auto& s : sources) names += (names.empty() ? "" : ", ") + s.name;
        throw ValidationError("sources have no common time span: " + names);
    }
    for (const auto& s : sources) {
        SourceCoverage clipped{s.name, s.span, {}};
        for (const auto& m : s.missing) {
            const HourRange r{std::max(m.first, report.common.first), std::min(m.last, report.common.last)};
            if (r.first <= r.last) clipped.missing.push_back(r);
        }
        report.sources.push_back(std::move(clipped));
    }
    return report;
}

std::string format_alignment(const AlignmentReport& report) {
    std::ostringstream out;
    out << "common_start=" << cal::format_hour(report.common.first) << "\n";
    out << "common_end=" << cal::format_hour(report.common.last) << "\n";
    for (const auto& s : report.sources) {
        out << "source=" << s.name << " span=" << cal::format_hour(s.span.first) << ".."
            << cal::format_hour(s.span.last) << " missing_ranges=" << s.missing.size() << "\n";
        for (const auto& m : s.missing) {
            out << "  missing " << cal::format_hour(m.first) << ".." << cal::format_hour(m.last) << "\n";
        }
    }
    return out.str();
}

}  // namespace emsf::data
