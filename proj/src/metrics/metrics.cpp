#include "p2ps/metrics/metrics.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "p2ps/errors.hpp"
#include "p2ps/imaging/png_io.hpp"

namespace fs = std::filesystem;

namespace p2ps::metrics {

ConfusionCounts confusion(const imaging::Image2D& pred, const imaging::Image2D& gt) {
    if (!pred.same_extents(gt)) {
        throw DataError("confusion: extents differ (" + std::to_string(pred.width) + "x" +
                        std::to_string(pred.height) + " vs " + std::to_string(gt.width) + "x" +
                        std::to_string(gt.height) + ")");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.pixels.size(); ++i) {
        std::uint8_t p = pred.pixels[i];
        std::uint8_t g = gt.pixels[i];
        if ((p != 0 && p != 255) || (g != 0 && g != 255)) {
            throw DataError("confusion: masks must be strictly binary (pixel " +
                            std::to_string(i) + " has values " + std::to_string(p) + "/" +
                            std::to_string(g) + ")");
        }
        if (p == 255) {
            (g == 255 ? c.tp : c.fp) += 1;
        } else {
            (g == 255 ? c.fn : c.tn) += 1;
        }
    }
    return c;
}

MetricValues metrics_from_counts(const ConfusionCounts& c) {
    if (c.total() <= 0) throw DataError("metrics need a nonzero pixel total");
    MetricValues m;
    m.accuracy = 100.0 * static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    if (c.tp + c.fp > 0) {
        m.precision = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    } else {
        m.precision = (c.fn == 0) ? 100.0 : 0.0;  // empty prediction vs (non)empty truth
    }
    if (c.tp + c.fn > 0) {
        m.recall = 100.0 * static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    } else {
        m.recall = (c.fp == 0) ? 100.0 : 0.0;
    }
    long long den = 2 * c.tp + c.fp + c.fn;
    m.f1 = (den > 0) ? 100.0 * static_cast<double>(2 * c.tp) / static_cast<double>(den) : 100.0;
    m.dice = m.f1;  // identical closed form from one set of counts
    return m;
}

MetricsReport aggregate(const std::vector<EvalPair>& pairs, Aggregation mode) {
    if (pairs.empty()) throw DataError("aggregate needs at least one (pred, gt) pair");
    MetricsReport report;
    report.aggregation = mode;
    report.n_images = static_cast<int>(pairs.size());

    ConfusionCounts sum;
    MetricValues mean;
    for (const auto& pair : pairs) {
        ConfusionCounts c = confusion(pair.pred, pair.gt);
        MetricValues m = metrics_from_counts(c);
        report.per_image.push_back({pair.id, m});
        sum += c;
        mean.accuracy += m.accuracy;
        mean.precision += m.precision;
        mean.recall += m.recall;
        mean.f1 += m.f1;
        mean.dice += m.dice;
    }
    if (mode == Aggregation::micro) {
        report.metrics = metrics_from_counts(sum);
    } else {
        double n = static_cast<double>(pairs.size());
        report.metrics = {mean.accuracy / n, mean.precision / n, mean.recall / n, mean.f1 / n,
                          mean.dice / n};
    }
    return report;
}

nlohmann::json report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["aggregation"] = (r.aggregation == Aggregation::micro) ? "micro" : "macro";
    j["n_images"] = r.n_images;
    j["accuracy"] = r.metrics.accuracy;
    j["precision"] = r.metrics.precision;
    j["recall"] = r.metrics.recall;
    j["f1"] = r.metrics.f1;
    j["dice"] = r.metrics.dice;
    if (!r.per_image.empty()) {
        j["per_image"] = nlohmann::json::array();
        for (const auto& p : r.per_image) {
            j["per_image"].push_back({{"id", p.id},
                                      {"accuracy", p.metrics.accuracy},
                                      {"precision", p.metrics.precision},
                                      {"recall", p.metrics.recall},
                                      {"f1", p.metrics.f1},
                                      {"dice", p.metrics.dice}});
        }
    }
    return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
    MetricsReport r;
    std::string agg = j.at("aggregation").get<std::string>();
    if (agg == "micro") {
        r.aggregation = Aggregation::micro;
    } else if (agg == "macro") {
        r.aggregation = Aggregation::macro;
    } else {
        throw DataError("unknown aggregation '" + agg + "' in report");
    }
    r.n_images = j.at("n_images").get<int>();
    r.metrics.accuracy = j.at("accuracy").get<double>();
    r.metrics.precision = j.at("precision").get<double>();
    r.metrics.recall = j.at("recall").get<double>();
    r.metrics.f1 = j.at("f1").get<double>();
    r.metrics.dice = j.at("dice").get<double>();
    if (j.contains("per_image")) {
        for (const auto& p : j.at("per_image")) {
            PerImageMetrics pm;
            pm.id = p.at("id").get<std::string>();
            pm.metrics.accuracy = p.at("accuracy").get<double>();
            pm.metrics.precision = p.at("precision").get<double>();
            pm.metrics.recall = p.at("recall").get<double>();
            pm.metrics.f1 = p.at("f1").get<double>();
            pm.metrics.dice = p.at("dice").get<double>();
            r.per_image.push_back(std::move(pm));
        }
    }
    return r;
}

void write_report_json(const MetricsReport& micro, const MetricsReport& macro,
                       const std::string& path, const std::string& dataset_tag) {
    nlohmann::json j = report_to_json(micro);
    MetricsReport macro_slim = macro;
    macro_slim.per_image.clear();  // the top-level table already lists every image
    j["macro"] = report_to_json(macro_slim);
    if (!dataset_tag.empty()) j["dataset"] = dataset_tag;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out.good()) throw IoError("write failed for " + path);
}

void write_per_image_csv(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "id,accuracy,precision,recall,f1,dice\n";
    char buf[256];
    for (const auto& p : report.per_image) {
        std::snprintf(buf, sizeof(buf), ",%.2f,%.2f,%.2f,%.2f,%.2f\n", p.metrics.accuracy,
                      p.metrics.precision, p.metrics.recall, p.metrics.f1, p.metrics.dice);
        out << p.id << buf;
    }
    if (!out.good()) throw IoError("write failed for " + path);
}

void write_history_csv(const model::TrainHistory& history, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "step,g_total,g_adv,g_l1,d_loss,train_acc,val_acc\n";
    char buf[512];
    for (const auto& rec : history.records) {
        int n = std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g",
                              rec.step, rec.g_total, rec.g_adv, rec.g_l1, rec.d_loss);
        out.write(buf, n);
        if (rec.train_acc.has_value()) {
            n = std::snprintf(buf, sizeof(buf), ",%.17g", *rec.train_acc);
            out.write(buf, n);
        } else {
            out << ",";
        }
        if (rec.val_acc.has_value()) {
            n = std::snprintf(buf, sizeof(buf), ",%.17g", *rec.val_acc);
            out.write(buf, n);
        } else {
            out << ",";
        }
        out << "\n";
    }
    if (!out.good()) throw IoError("write failed for " + path);
}

imaging::Image2D make_triptych(const imaging::Image2D& gt, const imaging::Image2D& pred) {
    if (!gt.same_extents(pred)) throw DataError("triptych: extents differ");
    imaging::Image2D diff = imaging::diff_image(gt, pred);
    const int gap = 4;
    imaging::Image2D out(gt.width * 3 + gap * 2, gt.height, 128);
    const imaging::Image2D* panels[3] = {&gt, &pred, &diff};
    for (int k = 0; k < 3; ++k) {
        int x0 = k * (gt.width + gap);
        for (int y = 0; y < gt.height; ++y) {
            for (int x = 0; x < gt.width; ++x) out.at(x0 + x, y) = panels[k]->at(x, y);
        }
    }
    return out;
}

void write_triptychs(const std::vector<EvalPair>& pairs, const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
    for (const auto& p : pairs) {
        imaging::save_png(make_triptych(p.gt, p.pred),
                          (fs::path(dir) / (p.id + "_triptych.png")).string());
    }
}

}  // namespace p2ps::metrics
