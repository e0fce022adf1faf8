#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "boxkey/metrics.hpp"
#include "boxkey/probe.hpp"

namespace boxkey {

struct CellKey {
    InstructionVariant variant = InstructionVariant::Normal;
    LexiconMode mode;
    int n_shots = 0;
    bool distractors = false;

    friend auto operator<=>(const CellKey& a, const CellKey& b) {
        const auto tup = [](const CellKey& c) {
            return std::tuple(static_cast<int>(c.variant), c.distractors,
                              static_cast<int>(c.mode.functor_mode),
                              static_cast<int>(c.mode.argument_mode), c.n_shots);
        };
        return tup(a) <=> tup(b);
    }
    friend bool operator==(const CellKey& a, const CellKey& b) { return (a <=> b) == 0; }
};

inline CellKey cell_of(const Trial& t) {
    return CellKey{t.instance.variant, t.instance.lexicon.mode, t.instance.n_shots,
                   !t.instance.distractors.empty()};
}

inline std::string cell_tag(const CellKey& c) {
    return variant_tag(c.variant) + "." + mode_tag(c.mode) + "." + std::to_string(c.n_shots) +
           "shot" + (c.distractors ? ".dist" : "");
}

inline std::string lexicon_label(LexiconMode mode) {
    const std::string f = mode.functor_mode == TokenMode::Synthetic ? "Synthetic Functor" : "NL Functor";
    const std::string a = mode.argument_mode == TokenMode::Synthetic ? "Synthetic Argument" : "NL Argument";
    return f + " + " + a;
}

inline std::string variant_block_label(InstructionVariant variant, bool distractors) {
    std::string label;
    switch (variant) {
        case InstructionVariant::Normal:
            label = "Normal Instruction";
            break;
        case InstructionVariant::CounterLanguageInstruction:
            label = "Counter-Intuitive Instruction (On NL)";
            break;
        case InstructionVariant::CounterOutputFormat:
            label = "Counter-Intuitive Instruction (Truth Values Switching)";
            break;
    }
    if (distractors) {
        label = variant == InstructionVariant::Normal ? "Actions w/ Distractor"
                                                      : label + " w/ Distractor";
    }
    return label;
}

// One summary row per cell; the grid means use the final queried step of each
// responsive trial.
struct ReportRow {
    CellKey cell;
    int samples = 0;
    int responsive = 0;
    double step_em = 0.0;
    double state_em = 0.0;
    double response_rate = 0.0;
};

inline std::vector<ReportRow> build_report_rows(const std::vector<Trial>& trials) {
    std::map<CellKey, ReportRow> rows;
    for (const Trial& t : trials) {
        ReportRow& row = rows[cell_of(t)];
        row.cell = cell_of(t);
        row.samples += 1;
        if (!t.responsive()) continue;
        row.responsive += 1;
        row.step_em += t.queries.back().score.step_em;
        row.state_em += t.queries.back().score.state_em;
    }
    std::vector<ReportRow> out;
    for (auto& [key, row] : rows) {
        if (row.responsive > 0) {
            row.step_em /= row.responsive;
            row.state_em /= row.responsive;
        }
        row.response_rate = row.samples > 0
                                ? static_cast<double>(row.responsive) / static_cast<double>(row.samples)
                                : 0.0;
        out.push_back(row);
    }
    return out;
}

namespace detail {

inline std::string percent(double v) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%.0f%%", v * 100.0);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write report file: " + path);
    return out;
}

}  // namespace detail

// Summary grid in the "Step-EM / State-EM" layout: variant-labeled row
// blocks, lexicon-labeled rows, one column per shot count.
inline void write_summary_grid(const std::string& path, const std::vector<ReportRow>& rows,
                               const std::string& config_comment = "") {
    std::set<int> shot_set;
    for (const ReportRow& r : rows) shot_set.insert(r.cell.n_shots);
    const std::vector<int> shots(shot_set.begin(), shot_set.end());

    std::map<std::pair<CellKey, int>, const ReportRow*> by_cell;
    std::vector<CellKey> block_rows;  // one representative per (variant, dist, mode)
    for (const ReportRow& r : rows) {
        CellKey base = r.cell;
        base.n_shots = 0;
        by_cell[{base, r.cell.n_shots}] = &r;
        if (std::find(block_rows.begin(), block_rows.end(), base) == block_rows.end()) {
            block_rows.push_back(base);
        }
    }
    std::sort(block_rows.begin(), block_rows.end());

    auto out = detail::open_out(path);
    if (!config_comment.empty()) out << "# config: " << config_comment << "\n";
    out << "instruction,lexicon";
    for (int s : shots) out << "," << s << "-shot";
    out << "\n";
    for (const CellKey& base : block_rows) {
        out << detail::csv_quote(variant_block_label(base.variant, base.distractors)) << ","
            << detail::csv_quote(lexicon_label(base.mode));
        for (int s : shots) {
            const auto it = by_cell.find({base, s});
            out << ",";
            if (it != by_cell.end() && it->second->responsive > 0) {
                out << detail::percent(it->second->step_em) << " / "
                    << detail::percent(it->second->state_em);
            } else {
                out << "-";
            }
        }
        out << "\n";
    }
}

inline void write_report_rows(const std::string& path, const std::vector<ReportRow>& rows,
                              const std::string& config_comment = "") {
    auto out = detail::open_out(path);
    if (!config_comment.empty()) out << "# config: " << config_comment << "\n";
    out << "cell,instruction,lexicon,shots,distractor,samples,responsive,step_em,state_em,"
           "response_rate\n";
    for (const ReportRow& r : rows) {
        char buf[64];
        out << cell_tag(r.cell) << ","
            << detail::csv_quote(variant_block_label(r.cell.variant, r.cell.distractors)) << ","
            << detail::csv_quote(lexicon_label(r.cell.mode)) << "," << r.cell.n_shots << ","
            << (r.cell.distractors ? "yes" : "no") << "," << r.samples << "," << r.responsive;
        std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,%.6f", r.step_em, r.state_em, r.response_rate);
        out << buf << "\n";
    }
}

// Per-cell curve data for trials with per-step queries.
struct CellCurves {
    CellKey cell;
    int demo_end = 0;  // last demonstrated step; equals the cell's shot count
    std::vector<StepAggregate> steps;
};

inline std::vector<CellCurves> build_cell_curves(const std::vector<Trial>& trials) {
    std::map<CellKey, std::pair<std::vector<std::vector<std::pair<int, StepScore>>>,
                                std::vector<std::vector<StepTransitions>>>>
        grouped;
    for (const Trial& t : trials) {
        if (t.queries.size() < 2 && t.transitions.empty()) continue;
        auto& [scores, transitions] = grouped[cell_of(t)];
        std::vector<std::pair<int, StepScore>> trial_scores;
        for (const QueryRecord& q : t.queries) {
            if (q.ok) trial_scores.emplace_back(q.step_index, q.score);
        }
        scores.push_back(std::move(trial_scores));
        transitions.push_back(t.transitions);
    }
    std::vector<CellCurves> out;
    for (auto& [cell, data] : grouped) {
        CellCurves curves;
        curves.cell = cell;
        curves.demo_end = cell.n_shots;
        curves.steps = aggregate_curves(data.first, data.second);
        out.push_back(std::move(curves));
    }
    return out;
}

inline void write_curves_csv(const std::string& path, const std::vector<CellCurves>& cells,
                             const std::string& config_comment = "") {
    auto out = detail::open_out(path);
    if (!config_comment.empty()) out << "# config: " << config_comment << "\n";
    out << "cell,step,n,mean_state_em,mean_step_em,demo_end\n";
    for (const CellCurves& c : cells) {
        for (const StepAggregate& row : c.steps) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), ",%.6f,%.6f,", row.mean_state_em, row.mean_step_em);
            out << cell_tag(c.cell) << "," << row.step << "," << row.n_scores << buf << c.demo_end
                << "\n";
        }
    }
}

// Raw counts and per-step shares for every transition category.
inline void write_transitions_csv(const std::string& path, const std::vector<CellCurves>& cells,
                                  const std::string& config_comment = "") {
    auto out = detail::open_out(path);
    if (!config_comment.empty()) out << "# config: " << config_comment << "\n";
    out << "cell,step,category,count,share\n";
    for (const CellCurves& c : cells) {
        for (const StepAggregate& row : c.steps) {
            int resolved = 0;
            for (int cat = 0; cat < kTransitionCategoryCount; ++cat) {
                if (cat != static_cast<int>(TransitionCategory::UNRESOLVED)) {
                    resolved += row.transition_counts[static_cast<size_t>(cat)];
                }
            }
            for (int cat = 0; cat < kTransitionCategoryCount; ++cat) {
                const int count = row.transition_counts[static_cast<size_t>(cat)];
                const double share =
                    resolved > 0 && cat != static_cast<int>(TransitionCategory::UNRESOLVED)
                        ? static_cast<double>(count) / resolved
                        : 0.0;
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.6f", share);
                out << cell_tag(c.cell) << "," << row.step << ","
                    << transition_category_name(static_cast<TransitionCategory>(cat)) << ","
                    << count << "," << buf << "\n";
            }
        }
    }
}

// --- SVG rendering -----------------------------------------------------------

namespace detail {

struct SvgCanvas {
    std::string body;
    double width, height;

    SvgCanvas(double w, double h) : width(w), height(h) {}

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double stroke = 1.0, const std::string& dash = "") {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "<line x1='%.1f' y1='%.1f' x2='%.1f' y2='%.1f' stroke='%s' "
                      "stroke-width='%.1f'%s/>\n",
                      x1, y1, x2, y2, color.c_str(), stroke,
                      dash.empty() ? "" : (" stroke-dasharray='" + dash + "'").c_str());
        body += buf;
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color) {
        if (pts.empty()) return;
        body += "<polyline fill='none' stroke='" + color + "' stroke-width='1.5' points='";
        char buf[64];
        for (const auto& [x, y] : pts) {
            std::snprintf(buf, sizeof(buf), "%.1f,%.1f ", x, y);
            body += buf;
        }
        body += "'/>\n";
    }

    void text(double x, double y, const std::string& s, int size = 11,
              const std::string& color = "#333", const std::string& anchor = "start") {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "<text x='%.1f' y='%.1f' font-size='%d' fill='%s' text-anchor='%s' "
                      "font-family='sans-serif'>",
                      x, y, size, color.c_str(), anchor.c_str());
        body += buf;
        for (char c : s) {
            if (c == '<') body += "&lt;";
            else if (c == '>') body += "&gt;";
            else if (c == '&') body += "&amp;";
            else body += c;
        }
        body += "</text>\n";
    }

    void save(const std::string& path) const {
        auto out = open_out(path);
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "<svg xmlns='http://www.w3.org/2000/svg' width='%.0f' height='%.0f' "
                      "viewBox='0 0 %.0f %.0f'>\n",
                      width, height, width, height);
        out << buf << "<rect width='100%' height='100%' fill='white'/>\n" << body << "</svg>\n";
    }
};

struct Axes {
    double x0, y0, x1, y1;  // plot rectangle, y0 is the top
    int max_step;
    double max_value;

    double sx(double step) const {
        return max_step > 1 ? x0 + (step - 1) / (max_step - 1.0) * (x1 - x0) : (x0 + x1) / 2;
    }
    double sy(double v) const { return y1 - v / max_value * (y1 - y0); }
};

inline void draw_axes(SvgCanvas& svg, const Axes& ax, const std::string& y_label) {
    svg.line(ax.x0, ax.y1, ax.x1, ax.y1, "#333");
    svg.line(ax.x0, ax.y0, ax.x0, ax.y1, "#333");
    for (int s = 1; s <= ax.max_step; ++s) {
        svg.text(ax.sx(s), ax.y1 + 14, std::to_string(s), 10, "#333", "middle");
    }
    for (int i = 0; i <= 4; ++i) {
        const double v = ax.max_value * i / 4.0;
        char buf[32];
        std::snprintf(buf, sizeof(buf), ax.max_value <= 1.0 ? "%.2f" : "%.0f", v);
        svg.text(ax.x0 - 6, ax.sy(v) + 4, buf, 10, "#333", "end");
        svg.line(ax.x0, ax.sy(v), ax.x1, ax.sy(v), "#ddd", 0.5);
    }
    svg.text(ax.x0, ax.y0 - 8, y_label, 11);
    svg.text((ax.x0 + ax.x1) / 2, ax.y1 + 28, "step", 11, "#333", "middle");
}

}  // namespace detail

// State-EM / Step-EM per step, with a purple vertical marker where the
// in-context demonstrations end.
inline void write_curves_svg(const std::string& path, const CellCurves& curves) {
    detail::SvgCanvas svg(560, 360);
    detail::Axes ax{60, 40, 520, 310, 1, 1.0};
    for (const StepAggregate& row : curves.steps) ax.max_step = std::max(ax.max_step, row.step);

    detail::draw_axes(svg, ax, "EM");
    if (curves.demo_end >= 1 && curves.demo_end <= ax.max_step) {
        svg.line(ax.sx(curves.demo_end), ax.y0, ax.sx(curves.demo_end), ax.y1, "purple", 1.2, "5,4");
    }
    std::vector<std::pair<double, double>> state_pts, step_pts;
    for (const StepAggregate& row : curves.steps) {
        if (row.n_scores == 0) continue;
        state_pts.emplace_back(ax.sx(row.step), ax.sy(row.mean_state_em));
        step_pts.emplace_back(ax.sx(row.step), ax.sy(row.mean_step_em));
    }
    svg.polyline(state_pts, "#1f77b4");
    svg.polyline(step_pts, "#d62728");
    svg.text(ax.x1 - 150, ax.y0 + 4, "State-EM", 11, "#1f77b4");
    svg.text(ax.x1 - 80, ax.y0 + 4, "Step-EM", 11, "#d62728");
    svg.text(ax.x0, 20, cell_tag(curves.cell), 12);
    svg.save(path);
}

// Two panels of transition counts per step: incorrect outcomes
// (FU, HU-IO, DR) on the left, correct outcomes (CU, MC, HU-AC) on the right.
inline void write_transitions_svg(const std::string& path, const CellCurves& curves) {
    detail::SvgCanvas svg(900, 360);
    const std::vector<TransitionCategory> incorrect = {
        TransitionCategory::FU, TransitionCategory::HU_IO, TransitionCategory::DR};
    const std::vector<TransitionCategory> correct = {
        TransitionCategory::CU, TransitionCategory::MC, TransitionCategory::HU_AC};
    const std::vector<std::string> colors = {"#d62728", "#ff7f0e", "#8c564b"};
    const std::vector<std::string> colors2 = {"#2ca02c", "#1f77b4", "#9467bd"};

    int max_step = 1;
    double max_count = 1;
    for (const StepAggregate& row : curves.steps) {
        max_step = std::max(max_step, row.step);
        for (int c = 0; c < kTransitionCategoryCount; ++c) {
            if (c == static_cast<int>(TransitionCategory::UNRESOLVED)) continue;
            max_count = std::max(max_count,
                                 static_cast<double>(row.transition_counts[static_cast<size_t>(c)]));
        }
    }

    const auto panel = [&](double x0, double x1, const std::vector<TransitionCategory>& cats,
                           const std::vector<std::string>& palette, const std::string& title) {
        detail::Axes ax{x0, 40, x1, 310, max_step, max_count};
        detail::draw_axes(svg, ax, "count");
        if (curves.demo_end >= 1 && curves.demo_end <= max_step) {
            svg.line(ax.sx(curves.demo_end), ax.y0, ax.sx(curves.demo_end), ax.y1, "purple", 1.2,
                     "5,4");
        }
        for (size_t i = 0; i < cats.size(); ++i) {
            std::vector<std::pair<double, double>> pts;
            for (const StepAggregate& row : curves.steps) {
                pts.emplace_back(
                    ax.sx(row.step),
                    ax.sy(row.transition_counts[static_cast<size_t>(cats[i])]));
            }
            svg.polyline(pts, palette[i]);
            svg.text(x0 + 10 + 70 * static_cast<double>(i), ax.y0 + 4,
                     transition_category_name(cats[i]), 11, palette[i]);
        }
        svg.text(x0, 20, title, 12);
    };
    panel(60, 420, incorrect, colors, "incorrect outcome: " + cell_tag(curves.cell));
    panel(500, 860, correct, colors2, "correct outcome");
    svg.save(path);
}

}  // namespace boxkey
