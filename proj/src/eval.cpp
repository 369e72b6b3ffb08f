#include "sparseseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include <json.hpp>

namespace sparseseg {

namespace {

double ratio(std::int64_t num, std::int64_t den) {
    return den > 0 ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
}

void finish_scores(ClassScore& s, std::optional<std::int64_t> evaluated) {
    s.precision = ratio(s.counts.tp, s.counts.tp + s.counts.fp);
    s.recall = ratio(s.counts.tp, s.counts.tp + s.counts.fn);
    const double pr = s.precision + s.recall;
    s.f1 = pr > 0.0 ? 2.0 * s.precision * s.recall / pr : 0.0;
    if (evaluated.has_value() && *evaluated > 0) {
        s.accuracy = ratio(s.counts.tp + s.counts.tn, *evaluated);
    }
}

void finish_macro(ClassMetrics& m) {
    m.macro_precision =
        (m.waterhole.precision + m.omuti.precision + m.bigtree.precision) / 3.0;
    m.macro_recall = (m.waterhole.recall + m.omuti.recall + m.bigtree.recall) / 3.0;
    m.macro_f1 = (m.waterhole.f1 + m.omuti.f1 + m.bigtree.f1) / 3.0;
    if (m.waterhole.accuracy && m.omuti.accuracy && m.bigtree.accuracy) {
        m.macro_accuracy =
            (*m.waterhole.accuracy + *m.omuti.accuracy + *m.bigtree.accuracy) / 3.0;
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

const ClassScore& ClassMetrics::row(ClassId c) const {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        default: return bigtree;
    }
}

ClassScore& ClassMetrics::row(ClassId c) {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        default: return bigtree;
    }
}

ClassMetrics pixel_metrics(const LabelGrid& pred, const LabelGrid& truth,
                           const RegionMask* region, ScoringMode mode) {
    if (pred.width != truth.width || pred.height != truth.height) {
        throw Error("DimensionMismatch", "prediction and truth grids differ in size");
    }
    if (region != nullptr && (region->width != pred.width || region->height != pred.height)) {
        throw Error("DimensionMismatch", "region mask does not match the grids");
    }

    ClassMetrics m;
    std::int64_t evaluated = 0;
    const std::size_t n = pred.labels.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (region != nullptr && region->inside[i] == 0) {
            continue;
        }
        const ClassId t = truth.labels[i];
        const ClassId p = pred.labels[i];
        if (t == ClassId::Unknown) {
            if (mode == ScoringMode::ExcludeUnknown || p == ClassId::Unknown) {
                continue;
            }
        }
        ++evaluated;
        for (ClassId c : kAnnotatedClasses) {
            MetricCounts& counts = m.row(c).counts;
            const bool is_truth = (t == c);
            const bool is_pred = (p == c);
            if (is_truth && is_pred) {
                ++counts.tp;
            } else if (is_truth) {
                ++counts.fn;
            } else if (is_pred) {
                ++counts.fp;
            } else {
                ++counts.tn;
            }
        }
    }
    for (ClassId c : kAnnotatedClasses) {
        finish_scores(m.row(c), evaluated);
    }
    finish_macro(m);
    return m;
}

ClassMetrics polygon_metrics(const std::vector<Component>& pred,
                             const std::vector<Component>& truth, double overlap_threshold) {
    if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0)) {
        throw Error("InvalidThreshold", "overlap_threshold must be in (0,1]");
    }

    struct Candidate {
        double overlap;
        std::size_t pred_idx;
        std::size_t truth_idx;
    };
    std::vector<Candidate> candidates;
    for (std::size_t pi = 0; pi < pred.size(); ++pi) {
        for (std::size_t ti = 0; ti < truth.size(); ++ti) {
            if (pred[pi].cls != truth[ti].cls) {
                continue;
            }
            // Bounding boxes that do not touch cannot overlap.
            if (pred[pi].max_col < truth[ti].min_col || truth[ti].max_col < pred[pi].min_col ||
                pred[pi].max_row < truth[ti].min_row || truth[ti].max_row < pred[pi].min_row) {
                continue;
            }
            const double o =
                std::max(overlap_fraction(pred[pi], truth[ti]), overlap_fraction(truth[ti], pred[pi]));
            if (o >= overlap_threshold) {
                candidates.push_back({o, pi, ti});
            }
        }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        if (a.overlap != b.overlap) return a.overlap > b.overlap;
        if (a.pred_idx != b.pred_idx) return a.pred_idx < b.pred_idx;
        return a.truth_idx < b.truth_idx;
    });

    std::vector<std::uint8_t> pred_matched(pred.size(), 0);
    std::vector<std::uint8_t> truth_matched(truth.size(), 0);
    ClassMetrics m;
    for (const Candidate& c : candidates) {
        if (pred_matched[c.pred_idx] || truth_matched[c.truth_idx]) {
            continue;
        }
        pred_matched[c.pred_idx] = 1;
        truth_matched[c.truth_idx] = 1;
        ++m.row(pred[c.pred_idx].cls).counts.tp;
    }
    for (std::size_t pi = 0; pi < pred.size(); ++pi) {
        if (!pred_matched[pi]) {
            ++m.row(pred[pi].cls).counts.fp;
        }
    }
    for (std::size_t ti = 0; ti < truth.size(); ++ti) {
        if (!truth_matched[ti]) {
            ++m.row(truth[ti].cls).counts.fn;
        }
    }
    for (ClassId c : kAnnotatedClasses) {
        finish_scores(m.row(c), std::nullopt);  // tn undefined at polygon level
    }
    finish_macro(m);
    return m;
}

StrategyRow evaluate_strategy(const StrategyArtifacts& artifacts, std::optional<double> e_th) {
    StrategyRow row;
    row.strategy = artifacts.strategy;
    row.e_th = e_th;

    std::vector<std::size_t> kept;
    kept.reserve(artifacts.pred.size());
    if (!e_th.has_value()) {
        for (std::size_t i = 0; i < artifacts.pred.size(); ++i) {
            kept.push_back(i);
        }
    } else {
        // Rank each prediction against the annotated areas of its class;
        // classes without reference areas are passed through.
        std::vector<PValueRecord> records;
        std::vector<std::size_t> record_owner;
        for (std::size_t i = 0; i < artifacts.pred.size(); ++i) {
            const Component& comp = artifacts.pred[i];
            const auto& ref = artifacts.annotated_areas.for_class(comp.cls);
            if (ref.empty()) {
                kept.push_back(i);
                continue;
            }
            records.push_back({comp.cls, comp.area_m2, empirical_pvalue(comp.area_m2, ref)});
            record_owner.push_back(i);
        }
        if (!records.empty()) {
            const FilterOutcome outcome = filter_by_threshold(records, *e_th);
            for (std::size_t k : outcome.kept_indices) {
                kept.push_back(record_owner[k]);
            }
            std::sort(kept.begin(), kept.end());
        }
    }

    std::vector<Component> filtered;
    filtered.reserve(kept.size());
    for (std::size_t i : kept) {
        filtered.push_back(artifacts.pred[i]);
    }
    row.kept_pred_indices = std::move(kept);

    row.detail = polygon_metrics(filtered, artifacts.truth, artifacts.overlap_threshold);
    row.precision = row.detail.macro_precision;
    row.recall = row.detail.macro_recall;
    row.f1 = row.detail.macro_f1;
    row.tp_total = row.detail.waterhole.counts.tp + row.detail.omuti.counts.tp +
                   row.detail.bigtree.counts.tp;
    return row;
}

std::string metrics_to_csv(const std::vector<StrategyRow>& rows) {
    std::string out = "strategy,e_th,class,tp,tn,fp,fn,accuracy,precision,recall,f1\n";
    auto add = [&out](const StrategyRow& row, const std::string& cls, const ClassScore& s) {
        out += row.strategy + ",";
        out += row.e_th ? format_double(*row.e_th) : std::string("raw");
        out += "," + cls + ",";
        out += std::to_string(s.counts.tp) + "," + std::to_string(s.counts.tn) + "," +
               std::to_string(s.counts.fp) + "," + std::to_string(s.counts.fn) + ",";
        out += s.accuracy ? format_double(*s.accuracy) : std::string("");
        out += "," + format_double(s.precision) + "," + format_double(s.recall) + "," +
               format_double(s.f1) + "\n";
    };
    for (const StrategyRow& row : rows) {
        for (ClassId c : kAnnotatedClasses) {
            add(row, class_name(c), row.detail.row(c));
        }
        out += row.strategy + ",";
        out += row.e_th ? format_double(*row.e_th) : std::string("raw");
        out += ",macro,,,,,";
        out += row.detail.macro_accuracy ? format_double(*row.detail.macro_accuracy)
                                         : std::string("");
        out += "," + format_double(row.precision) + "," + format_double(row.recall) + "," +
               format_double(row.f1) + "\n";
    }
    return out;
}

std::string metrics_to_json(const std::vector<StrategyRow>& rows) {
    nlohmann::json arr = nlohmann::json::array();
    for (const StrategyRow& row : rows) {
        nlohmann::json j;
        j["strategy"] = row.strategy;
        if (row.e_th) {
            j["e_th"] = *row.e_th;
        } else {
            j["e_th"] = nullptr;
        }
        j["precision"] = row.precision;
        j["recall"] = row.recall;
        j["f1"] = row.f1;
        j["tp_total"] = row.tp_total;
        for (ClassId c : kAnnotatedClasses) {
            const ClassScore& s = row.detail.row(c);
            nlohmann::json cls;
            cls["tp"] = s.counts.tp;
            cls["tn"] = s.counts.tn;
            cls["fp"] = s.counts.fp;
            cls["fn"] = s.counts.fn;
            if (s.accuracy) {
                cls["accuracy"] = *s.accuracy;
            }
            cls["precision"] = s.precision;
            cls["recall"] = s.recall;
            cls["f1"] = s.f1;
            j[class_name(c)] = std::move(cls);
        }
        arr.push_back(std::move(j));
    }
    return arr.dump() + "\n";
}

std::string ablation_csv(const std::vector<StrategyRow>& rows) {
    // Column per filter setting, in first-seen order; row per strategy.
    std::vector<std::string> strategies;
    std::vector<std::optional<double>> filters;
    auto filter_key = [](const std::optional<double>& e) {
        return e ? "eth_" + format_double(*e) : std::string("raw");
    };
    std::map<std::pair<std::string, std::string>, double> cells;
    for (const StrategyRow& row : rows) {
        if (std::find(strategies.begin(), strategies.end(), row.strategy) == strategies.end()) {
            strategies.push_back(row.strategy);
        }
        bool seen = false;
        for (const auto& f : filters) {
            if (filter_key(f) == filter_key(row.e_th)) {
                seen = true;
                break;
            }
        }
        if (!seen) {
            filters.push_back(row.e_th);
        }
        cells[{row.strategy, filter_key(row.e_th)}] = row.f1;
    }

    std::string out = "strategy";
    for (const auto& f : filters) {
        out += "," + filter_key(f);
    }
    out += "\n";
    for (const std::string& s : strategies) {
        out += s;
        for (const auto& f : filters) {
            const auto it = cells.find({s, filter_key(f)});
            out += ",";
            if (it != cells.end()) {
                out += format_double(it->second);
            }
        }
        out += "\n";
    }
    return out;
}

}  // namespace sparseseg
