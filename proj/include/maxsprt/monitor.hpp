#pragma once

// Applies the stopping rule to an observed event stream. Events before a
// delayed start are not tested individually; their statistic is evaluated
// at the first look (mu = d_start), and the earliest count already
// sufficient there is flagged as the signal row.

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "csv.hpp"
#include "design.hpp"
#include "llr.hpp"

namespace maxsprt {

struct EventRecord {
    double mu = 0.0; // cumulative expected events under the null at exposure
    std::string label;
};

struct MonitorRow {
    std::int64_t n = 0;
    double mu = 0.0;       // arrival
    double llr_value = 0.0; // statistic at the row's test time
    double tau = 0.0;       // rejection threshold for this count
    bool signaled = false;
};

enum class MonitorStatus { Signal, Continue, Ended };

inline const char* to_string(MonitorStatus s) {
    switch (s) {
        case MonitorStatus::Signal: return "signal";
        case MonitorStatus::Continue: return "continue";
        default: return "surveillance ended";
    }
}

struct MonitorVerdict {
    std::vector<MonitorRow> rows;
    MonitorStatus status = MonitorStatus::Continue;
    std::int64_t signal_event = 0; // valid when status == Signal
};

/// Reads an events file with header `mu,label` (label optional). Throws
/// CsvError carrying the offending line number.
inline std::vector<EventRecord> read_events(std::istream& is) {
    CsvDoc doc = csv_parse(is);
    if (!doc.header.empty() && doc.header[0] != "mu")
        throw CsvError(1, "events file must start with header 'mu,label'");
    std::vector<EventRecord> out;
    out.reserve(doc.rows.size());
    for (std::size_t i = 0; i < doc.rows.size(); ++i) {
        const auto& row = doc.rows[i];
        const int line = doc.row_lines[i];
        if (row.empty() || row[0].empty()) throw CsvError(line, "missing mu value");
        EventRecord r;
        try {
            std::size_t pos = 0;
            r.mu = std::stod(row[0], &pos);
            if (pos != row[0].size()) throw std::invalid_argument(row[0]);
        } catch (const std::exception&) {
            throw CsvError(line, "malformed mu value '" + row[0] + "'");
        }
        if (row.size() > 1) r.label = row[1];
        if (!out.empty() && r.mu <= out.back().mu)
            throw CsvError(line, "mu values must be strictly increasing");
        out.push_back(std::move(r));
    }
    return out;
}

inline MonitorVerdict monitor(const SequentialDesign& d,
                              const std::vector<EventRecord>& events) {
    d.validate();
    MonitorVerdict v;
    v.rows.reserve(events.size());
    double prev = -1.0;
    bool signaled = false;
    for (std::size_t i = 0; i < events.size(); ++i) {
        const double mu = events[i].mu;
        if (mu <= prev)
            throw std::domain_error("monitor: event mu values must be strictly increasing");
        if (mu > d.t_cap)
            throw std::domain_error("monitor: event beyond t_cap");
        prev = mu;
        MonitorRow row;
        row.n = static_cast<std::int64_t>(i) + 1;
        row.mu = mu;
        const double test_at = mu < d.d_start ? d.d_start : mu;
        row.llr_value = llr(row.n, test_at);
        row.tau = invert_boundary(row.n, d.cv);
        row.signaled = !signaled && row.n >= d.m_min && row.llr_value >= d.cv;
        if (row.signaled) {
            signaled = true;
            v.signal_event = row.n;
        }
        v.rows.push_back(row);
    }
    if (signaled)
        v.status = MonitorStatus::Signal;
    else if (!events.empty() && events.back().mu >= d.t_cap)
        v.status = MonitorStatus::Ended;
    else
        v.status = MonitorStatus::Continue;
    return v;
}

} // namespace maxsprt
