#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "p2ps/imaging/image.hpp"
#include "p2ps/model/pix2pix.hpp"

namespace p2ps::metrics {

/// Pixel-level 2x2 tally; positive class = lung pixel (value 255).
struct ConfusionCounts {
    long long tp = 0, tn = 0, fp = 0, fn = 0;

    long long total() const { return tp + tn + fp + fn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        tn += o.tn;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
};

/// Both masks must share extents and be strictly binary (0/255 only).
ConfusionCounts confusion(const imaging::Image2D& pred, const imaging::Image2D& gt);

/// All values are percentages in [0, 100].
struct MetricValues {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, dice = 0;

    bool operator==(const MetricValues&) const = default;
};

/// accuracy = (tp+tn)/total; precision = tp/(tp+fp); recall = tp/(tp+fn);
/// f1 and dice share the closed form 2tp/(2tp+fp+fn), which is the harmonic
/// mean of precision and recall whenever the latter are well defined.
/// Zero-denominator conventions: an empty prediction scores precision 100
/// against an empty truth and 0 otherwise (recall symmetrically); f1/dice
/// are 100 when both masks are empty. Throws DataError on zero total.
MetricValues metrics_from_counts(const ConfusionCounts& c);

struct EvalPair {
    std::string id;
    imaging::Image2D pred;
    imaging::Image2D gt;
};

struct PerImageMetrics {
    std::string id;
    MetricValues metrics;

    bool operator==(const PerImageMetrics&) const = default;
};

enum class Aggregation { micro, macro };

struct MetricsReport {
    Aggregation aggregation = Aggregation::micro;
    int n_images = 0;
    MetricValues metrics;
    std::vector<PerImageMetrics> per_image;

    bool operator==(const MetricsReport&) const = default;
};

/// micro: sum counts over the set, then apply the formulas once.
/// macro: average the per-image metric values. Both fill per_image.
MetricsReport aggregate(const std::vector<EvalPair>& pairs, Aggregation mode);

/// JSON schema: aggregation, n_images, accuracy, precision, recall, f1,
/// dice, optional per_image [{id, accuracy, ...}]. parse(serialize(r)) == r.
nlohmann::json report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const nlohmann::json& j);

/// Writes both aggregations into one document: the micro report's keys at
/// the top level plus a "macro" sibling object (without its per-image table).
/// A non-empty dataset_tag adds a "dataset" key labeling the source.
void write_report_json(const MetricsReport& micro, const MetricsReport& macro,
                       const std::string& path, const std::string& dataset_tag = "");

/// Human-oriented table: id,accuracy,precision,recall,f1,dice at two
/// decimals per row (the JSON report keeps full precision).
void write_per_image_csv(const MetricsReport& report, const std::string& path);

/// CSV columns: step,g_total,g_adv,g_l1,d_loss,train_acc,val_acc.
/// Doubles print with %.17g so parsing the file recovers them exactly;
/// absent accuracies leave their cells empty.
void write_history_csv(const model::TrainHistory& history, const std::string& path);

/// gt | prediction | absolute difference, side by side with gray separators.
imaging::Image2D make_triptych(const imaging::Image2D& gt, const imaging::Image2D& pred);

/// Writes <id>_triptych.png for each pair into dir (created if needed).
void write_triptychs(const std::vector<EvalPair>& pairs, const std::string& dir);

}  // namespace p2ps::metrics
