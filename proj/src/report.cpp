#include "report.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>

#include "error.hpp"
#include "svg.hpp"
#include "textio.hpp"

namespace mapos::report {

namespace {

std::string d9(double v) { return fmt_double(v, 9); }

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());
}

std::string nmse_csv(const EvalOutputs& out) {
    std::string s = "model,horizon,nmse\n";
    for (const auto& m : out.models)
        for (std::size_t i = 0; i < m.horizons.size(); ++i)
            s += m.name + "," + std::to_string(m.horizons[i]) + "," +
                 d9(m.nmse_at_horizon[i]) + "\n";
    return s;
}

std::string accuracy_csv(const EvalOutputs& out) {
    std::string s = "model,horizon,accuracy\n";
    for (const auto& m : out.models)
        for (std::size_t i = 0; i < m.horizons.size(); ++i)
            s += m.name + "," + std::to_string(m.horizons[i]) + "," +
                 d9(m.accuracy_at_horizon[i]) + "\n";
    return s;
}

std::string mse_csv(const EvalOutputs& out) {
    std::string s = "model,median,q1,q3,whisker_lo,whisker_hi\n";
    for (const auto& m : out.models)
        s += m.name + "," + d9(m.mse_box.median) + "," + d9(m.mse_box.q1) + "," +
             d9(m.mse_box.q3) + "," + d9(m.mse_box.whisker_lo) + "," +
             d9(m.mse_box.whisker_hi) + "\n";
    return s;
}

std::string timing_csv(const EvalOutputs& out) {
    std::string s = "model,mean_ms,std_ms,runs\n";
    for (const auto& m : out.models)
        s += m.name + "," + d9(m.timing.mean_ms) + "," + d9(m.timing.std_ms) + "," +
             std::to_string(m.timing.runs) + "\n";
    return s;
}

std::string replay_csv(const EvalOutputs& out) {
    std::string s = "model,slot,param,value,fixed,optimal,predicted\n";
    for (const auto& r : out.replay)
        s += r.model + "," + std::to_string(r.slot) + "," + r.param + "," + d9(r.value) +
             "," + d9(r.fixed_rate) + "," + d9(r.optimal_rate) + "," +
             d9(r.predicted_rate) + "\n";
    return s;
}

// the radar-figure quantities as a flat table
std::string summary_csv(const EvalOutputs& out) {
    std::string s =
        "model,nmse,accuracy,median_mse,mean_inference_ms,clamped_fraction,"
        "mean_predicted_secrecy\n";
    for (const auto& m : out.models) {
        double mean_sec = 0.0;
        int n = 0;
        for (const auto& r : out.replay)
            if (r.model == m.name) {
                mean_sec += r.predicted_rate;
                ++n;
            }
        if (n > 0) mean_sec /= n;
        const double nm = m.nmse_at_horizon.empty() ? 0.0 : m.nmse_at_horizon.back();
        const double ac = m.accuracy_at_horizon.empty() ? 0.0 : m.accuracy_at_horizon.back();
        s += m.name + "," + d9(nm) + "," + d9(ac) + "," + d9(m.mse_box.median) + "," +
             d9(m.timing.mean_ms) + "," + d9(m.clamped_fraction) + "," + d9(mean_sec) +
             "\n";
    }
    return s;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& path,
                                                const std::string& expect_header) {
    std::string text = read_text_file(path);
    auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]) != expect_header)
        throw io_error(path + ": unexpected header; expected '" + expect_header + "'");
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::string line = trim(lines[i]);
        if (line.empty()) continue;
        rows.push_back(split(line, ','));
    }
    return rows;
}

double to_d(const std::string& s, const std::string& path) {
    double v;
    if (!parse_double(s, &v)) throw io_error(path + ": bad number '" + s + "'");
    return v;
}

} // namespace

void write_eval_csvs(const EvalOutputs& out, const std::string& dir) {
    ensure_dir(dir);
    write_text_file(join_path(dir, "nmse_horizons.csv"), nmse_csv(out));
    write_text_file(join_path(dir, "accuracy_horizons.csv"), accuracy_csv(out));
    write_text_file(join_path(dir, "mse_stats.csv"), mse_csv(out));
    write_text_file(join_path(dir, "timing.csv"), timing_csv(out));
    write_text_file(join_path(dir, "secrecy_replay.csv"), replay_csv(out));
    write_text_file(join_path(dir, "summary.csv"), summary_csv(out));
}

EvalOutputs read_eval_csvs(const std::string& dir) {
    EvalOutputs out;
    std::map<std::string, std::size_t> index;
    auto model_of = [&](const std::string& name) -> ModelMetrics& {
        auto it = index.find(name);
        if (it == index.end()) {
            index[name] = out.models.size();
            out.models.push_back({});
            out.models.back().name = name;
            return out.models.back();
        }
        return out.models[it->second];
    };

    {
        std::string p = join_path(dir, "nmse_horizons.csv");
        for (auto& r : parse_csv(p, "model,horizon,nmse")) {
            if (r.size() != 3) throw io_error(p + ": malformed row");
            ModelMetrics& m = model_of(r[0]);
            m.horizons.push_back(static_cast<int>(to_d(r[1], p)));
            m.nmse_at_horizon.push_back(to_d(r[2], p));
        }
    }
    {
        std::string p = join_path(dir, "accuracy_horizons.csv");
        for (auto& r : parse_csv(p, "model,horizon,accuracy")) {
            if (r.size() != 3) throw io_error(p + ": malformed row");
            model_of(r[0]).accuracy_at_horizon.push_back(to_d(r[2], p));
        }
    }
    {
        std::string p = join_path(dir, "mse_stats.csv");
        for (auto& r : parse_csv(p, "model,median,q1,q3,whisker_lo,whisker_hi")) {
            if (r.size() != 6) throw io_error(p + ": malformed row");
            ModelMetrics& m = model_of(r[0]);
            m.mse_box.median = to_d(r[1], p);
            m.mse_box.q1 = to_d(r[2], p);
            m.mse_box.q3 = to_d(r[3], p);
            m.mse_box.whisker_lo = to_d(r[4], p);
            m.mse_box.whisker_hi = to_d(r[5], p);
        }
    }
    {
        std::string p = join_path(dir, "timing.csv");
        for (auto& r : parse_csv(p, "model,mean_ms,std_ms,runs")) {
            if (r.size() != 4) throw io_error(p + ": malformed row");
            ModelMetrics& m = model_of(r[0]);
            m.timing.mean_ms = to_d(r[1], p);
            m.timing.std_ms = to_d(r[2], p);
            m.timing.runs = static_cast<int>(to_d(r[3], p));
        }
    }
    {
        std::string p = join_path(dir, "secrecy_replay.csv");
        for (auto& r : parse_csv(p, "model,slot,param,value,fixed,optimal,predicted")) {
            if (r.size() != 7) throw io_error(p + ": malformed row");
            eval::ReplayRow row;
            row.model = r[0];
            row.slot = static_cast<int>(to_d(r[1], p));
            row.param = r[2];
            row.value = to_d(r[3], p);
            row.fixed_rate = to_d(r[4], p);
            row.optimal_rate = to_d(r[5], p);
            row.predicted_rate = to_d(r[6], p);
            out.replay.push_back(row);
        }
    }
    return out;
}

void emit_report(const EvalOutputs& out, const std::string& dir) {
    ensure_dir(dir);
    struct Emitted {
        std::string file;
        std::string kind;
        std::string schema;
    };
    std::vector<Emitted> manifest;
    auto emit = [&](const std::string& name, const std::string& kind,
                    const std::string& schema, const std::string& content) {
        write_text_file(join_path(dir, name), content);
        manifest.push_back({name, kind, schema});
    };

    if (!out.models.empty()) {
        emit("nmse_horizons.csv", "csv", "model;horizon;nmse", nmse_csv(out));
        emit("accuracy_horizons.csv", "csv", "model;horizon;accuracy", accuracy_csv(out));
        emit("mse_stats.csv", "csv", "model;median;q1;q3;whisker_lo;whisker_hi",
             mse_csv(out));
        emit("timing.csv", "csv", "model;mean_ms;std_ms;runs", timing_csv(out));
        emit("summary.csv", "csv",
             "model;nmse;accuracy;median_mse;mean_inference_ms;clamped_fraction;"
             "mean_predicted_secrecy",
             summary_csv(out));

        std::vector<Series> nmse_series, acc_series;
        std::vector<BoxSpec> boxes;
        for (const auto& m : out.models) {
            Series sn{m.name, {}, {}};
            Series sa{m.name, {}, {}};
            for (std::size_t i = 0; i < m.horizons.size(); ++i) {
                sn.x.push_back(m.horizons[i]);
                sn.y.push_back(m.nmse_at_horizon[i]);
                sa.x.push_back(m.horizons[i]);
                sa.y.push_back(i < m.accuracy_at_horizon.size() ? m.accuracy_at_horizon[i]
                                                                : 0.0);
            }
            nmse_series.push_back(std::move(sn));
            acc_series.push_back(std::move(sa));
            boxes.push_back({m.name, m.mse_box});
        }
        emit("nmse_vs_horizon.svg", "svg", "line chart: NMSE vs prediction horizon",
             line_chart_svg("NMSE vs prediction horizon", "horizon (slots)", "NMSE",
                            nmse_series));
        emit("accuracy_vs_horizon.svg", "svg",
             "line chart: accuracy vs prediction horizon",
             line_chart_svg("Prediction accuracy vs horizon", "horizon (slots)",
                            "accuracy", acc_series));
        emit("mse_box.svg", "svg", "box chart: per-window MSE distribution",
             box_chart_svg("Per-window MSE distribution", "MSE (m^2)", boxes));
    }

    if (!out.replay.empty()) {
        emit("secrecy_replay.csv", "csv", "model;slot;param;value;fixed;optimal;predicted",
             replay_csv(out));

        for (const std::string param : {"alpha", "noise_w", "power_w"}) {
            // mean over slots per grid value: fixed/optimal once, predicted per model
            std::map<double, std::pair<double, int>> fixed_acc, opt_acc;
            std::map<std::string, std::map<double, std::pair<double, int>>> pred_acc;
            for (const auto& r : out.replay) {
                if (r.param != param) continue;
                auto& f = fixed_acc[r.value];
                f.first += r.fixed_rate;
                f.second += 1;
                auto& o = opt_acc[r.value];
                o.first += r.optimal_rate;
                o.second += 1;
                auto& p = pred_acc[r.model][r.value];
                p.first += r.predicted_rate;
                p.second += 1;
            }
            if (fixed_acc.empty()) continue;
            std::vector<Series> series;
            Series fixed{"fixed grid", {}, {}}, optimal{"optimizer", {}, {}};
            for (const auto& [v, acc] : fixed_acc) {
                fixed.x.push_back(v);
                fixed.y.push_back(acc.first / acc.second);
            }
            for (const auto& [v, acc] : opt_acc) {
                optimal.x.push_back(v);
                optimal.y.push_back(acc.first / acc.second);
            }
            series.push_back(std::move(fixed));
            series.push_back(std::move(optimal));
            for (const auto& [name, per_value] : pred_acc) {
                Series s{"predicted: " + name, {}, {}};
                for (const auto& [v, acc] : per_value) {
                    s.x.push_back(v);
                    s.y.push_back(acc.first / acc.second);
                }
                series.push_back(std::move(s));
            }
            const std::string fname = "secrecy_vs_" + param + ".svg";
            emit(fname, "svg", "line chart: mean secrecy rate vs " + param,
                 line_chart_svg("Secrecy rate vs " + param, param, "secrecy (bits/s/Hz)",
                                series));
        }
    }

    std::string mf = "file,kind,schema\n";
    for (const auto& e : manifest) mf += e.file + "," + e.kind + "," + e.schema + "\n";
    write_text_file(join_path(dir, "manifest.csv"), mf);
}

} // namespace mapos::report
