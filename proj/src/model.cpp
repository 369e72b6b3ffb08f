#include "sparseseg/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <thread>

#include <json.hpp>

namespace sparseseg {

namespace {

constexpr double kProbClamp = 1e-12;

void softmax4(const double* z, double* p) {
    double zmax = z[0];
    for (int c = 1; c < kNumClasses; ++c) {
        zmax = std::max(zmax, z[c]);
    }
    double denom = 0.0;
    for (int c = 0; c < kNumClasses; ++c) {
        p[c] = std::exp(z[c] - zmax);
        denom += p[c];
    }
    const double inv = 1.0 / denom;
    for (int c = 0; c < kNumClasses; ++c) {
        p[c] *= inv;
    }
}

// Features of the patch centered on (col,row) written into out
// (feature_dim doubles): intensities in [0,1], then mean, then std.
void extract_features_into(const GrayRaster& raster, int col, int row, int patch_size,
                           double* out) {
    const int half = patch_size / 2;
    const int w = raster.width;
    const int h = raster.height;
    const double scale = 1.0 / 255.0;
    const int n = patch_size * patch_size;

    double sum = 0.0;
    double sum_sq = 0.0;
    int k = 0;
    for (int dr = -half; dr <= half; ++dr) {
        const int rr = std::clamp(row + dr, 0, h - 1);
        const std::uint8_t* line = raster.values.data() + static_cast<std::size_t>(rr) * w;
        for (int dc = -half; dc <= half; ++dc) {
            const int cc = std::clamp(col + dc, 0, w - 1);
            const double v = line[cc] * scale;
            out[k++] = v;
            sum += v;
            sum_sq += v * v;
        }
    }
    const double mean = sum / n;
    const double var = std::max(sum_sq / n - mean * mean, 0.0);
    out[n] = mean;
    out[n + 1] = std::sqrt(var);
}

void logits(const SegmenterParams& params, const double* x, double* z) {
    const int fd = params.feature_dim;
    for (int c = 0; c < kNumClasses; ++c) {
        const double* wc = params.weights.data() + static_cast<std::size_t>(c) * fd;
        double acc = params.bias[static_cast<std::size_t>(c)];
        for (int f = 0; f < fd; ++f) {
            acc += wc[f] * x[f];
        }
        z[c] = acc;
    }
}

}  // namespace

void SegmenterConfig::validate() const {
    if (patch_size < 3 || patch_size % 2 == 0) {
        throw Error("InvalidConfig", "patch_size must be odd and >= 3");
    }
    if (!(learning_rate > 0.0)) {
        throw Error("InvalidConfig", "learning_rate must be > 0");
    }
    if (batch_size < 1) {
        throw Error("InvalidConfig", "batch_size must be >= 1");
    }
    if (max_epochs < 1) {
        throw Error("InvalidConfig", "max_epochs must be >= 1");
    }
}

int feature_dim(int patch_size) { return patch_size * patch_size + 2; }

std::vector<double> extract_features(const GrayRaster& raster, int col, int row,
                                     int patch_size) {
    if (col < 0 || row < 0 || col >= raster.width || row >= raster.height) {
        throw Error("OutOfBounds", "pixel (" + std::to_string(col) + "," + std::to_string(row) +
                                       ") outside raster");
    }
    std::vector<double> out(static_cast<std::size_t>(feature_dim(patch_size)));
    extract_features_into(raster, col, row, patch_size, out.data());
    return out;
}

double weighted_ce_loss(const std::vector<std::array<double, kNumClasses>>& probs,
                        const std::vector<ClassId>& labels, const ClassWeights& w) {
    if (probs.empty() || probs.size() != labels.size()) {
        throw Error("EmptyBatch", "loss needs a non-empty batch with matching labels");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::max(probs[i][static_cast<std::size_t>(labels[i])], kProbClamp);
        acc += w.for_class(labels[i]) * -std::log(p);
    }
    return acc / static_cast<double>(probs.size());
}

double batch_loss(const SegmenterParams& params, const SampleBatch& batch,
                  const ClassWeights& w) {
    if (batch.size() == 0) {
        throw Error("EmptyBatch", "loss of an empty batch is undefined");
    }
    double z[kNumClasses];
    double p[kNumClasses];
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        logits(params, batch.sample(i), z);
        softmax4(z, p);
        const auto y = static_cast<std::size_t>(batch.labels[i]);
        acc += w.for_class(batch.labels[i]) * -std::log(std::max(p[y], kProbClamp));
    }
    return acc / static_cast<double>(batch.size());
}

Gradient loss_gradient(const SegmenterParams& params, const SampleBatch& batch,
                       const ClassWeights& w) {
    if (batch.size() == 0) {
        throw Error("EmptyBatch", "gradient of an empty batch is undefined");
    }
    const int fd = params.feature_dim;
    Gradient g;
    g.weights.assign(params.weights.size(), 0.0);

    double z[kNumClasses];
    double p[kNumClasses];
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double* x = batch.sample(i);
        logits(params, x, z);
        softmax4(z, p);
        const auto y = static_cast<std::size_t>(batch.labels[i]);
        const double scale = w.for_class(batch.labels[i]) * inv_b;
        for (int c = 0; c < kNumClasses; ++c) {
            const double gz = scale * (p[c] - (static_cast<std::size_t>(c) == y ? 1.0 : 0.0));
            g.bias[static_cast<std::size_t>(c)] += gz;
            double* gw = g.weights.data() + static_cast<std::size_t>(c) * fd;
            for (int f = 0; f < fd; ++f) {
                gw[f] += gz * x[f];
            }
        }
    }
    return g;
}

std::pair<SegmenterParams, TrainReport> train(const GrayRaster& raster,
                                              const LabelGrid& train_mask,
                                              const ClassWeights& w,
                                              const SegmenterConfig& cfg,
                                              const RegionMask* region) {
    cfg.validate();
    if (raster.width != train_mask.width || raster.height != train_mask.height) {
        throw Error("DimensionMismatch", "raster and train mask sizes differ");
    }

    const PixelCounts counts = count_labels(train_mask, region);
    for (ClassId c : kAnnotatedClasses) {
        if (counts.for_class(c) <= 0) {
            throw Error("MissingClass", "class '" + class_name(c) +
                                            "' has no pixels in the training region");
        }
    }

    std::vector<std::int64_t> samples;
    const std::int64_t n_pixels = train_mask.pixel_count();
    samples.reserve(static_cast<std::size_t>(region != nullptr ? region->count() : n_pixels));
    for (std::int64_t i = 0; i < n_pixels; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        if (region != nullptr && region->inside[idx] == 0) {
            continue;
        }
        if (!cfg.include_unknown_as_class && train_mask.labels[idx] == ClassId::Unknown) {
            continue;
        }
        samples.push_back(i);
    }
    if (samples.empty()) {
        throw Error("EmptyBatch", "no training samples in the region");
    }

    const int fd = feature_dim(cfg.patch_size);
    SegmenterParams params;
    params.feature_dim = fd;
    params.weights.assign(static_cast<std::size_t>(fd) * kNumClasses, 0.0);
    params.config = cfg;

    TrainReport report;
    report.weights = w;
    report.seed = cfg.seed;

    std::mt19937 rng(static_cast<std::uint32_t>(cfg.seed));
    const auto batch_size = static_cast<std::size_t>(cfg.batch_size);

    std::vector<double> feat(batch_size * static_cast<std::size_t>(fd));
    std::vector<double> grad_w(params.weights.size());
    std::array<double, kNumClasses> grad_b = {};
    double z[kNumClasses];
    double p[kNumClasses];

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        for (std::size_t i = samples.size(); i > 1; --i) {
            const std::size_t j = rng() % i;
            std::swap(samples[i - 1], samples[j]);
        }

        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < samples.size(); begin += batch_size) {
            const std::size_t end = std::min(begin + batch_size, samples.size());
            const std::size_t b = end - begin;

            for (std::size_t s = 0; s < b; ++s) {
                const std::int64_t pix = samples[begin + s];
                extract_features_into(raster, static_cast<int>(pix % raster.width),
                                      static_cast<int>(pix / raster.width), cfg.patch_size,
                                      feat.data() + s * static_cast<std::size_t>(fd));
            }

            std::fill(grad_w.begin(), grad_w.end(), 0.0);
            grad_b.fill(0.0);
            const double inv_b = 1.0 / static_cast<double>(b);
            for (std::size_t s = 0; s < b; ++s) {
                const double* x = feat.data() + s * static_cast<std::size_t>(fd);
                logits(params, x, z);
                softmax4(z, p);
                const ClassId label = train_mask.labels[static_cast<std::size_t>(samples[begin + s])];
                const auto y = static_cast<std::size_t>(label);
                const double lambda = w.for_class(label);
                epoch_loss += lambda * -std::log(std::max(p[y], kProbClamp));
                const double scale = lambda * inv_b;
                for (int c = 0; c < kNumClasses; ++c) {
                    const double gz =
                        scale * (p[c] - (static_cast<std::size_t>(c) == y ? 1.0 : 0.0));
                    grad_b[static_cast<std::size_t>(c)] += gz;
                    double* gw = grad_w.data() + static_cast<std::size_t>(c) * fd;
                    for (int f = 0; f < fd; ++f) {
                        gw[f] += gz * x[f];
                    }
                }
            }

            const double lr = cfg.learning_rate;
            for (std::size_t k = 0; k < params.weights.size(); ++k) {
                params.weights[k] -= lr * grad_w[k];
            }
            for (int c = 0; c < kNumClasses; ++c) {
                params.bias[static_cast<std::size_t>(c)] -= lr * grad_b[static_cast<std::size_t>(c)];
            }
        }

        epoch_loss /= static_cast<double>(samples.size());
        if (!std::isfinite(epoch_loss)) {
            throw Error("NonFiniteLoss", "training diverged at epoch " + std::to_string(epoch));
        }
        report.epoch_losses.push_back(epoch_loss);
        report.epochs_run = epoch + 1;
        report.final_loss = epoch_loss;
    }
    return {std::move(params), std::move(report)};
}

ProbabilityGrid predict(const SegmenterParams& params, const GrayRaster& raster,
                        int n_threads) {
    if (params.feature_dim != feature_dim(params.config.patch_size)) {
        throw Error("InvalidParams", "feature_dim does not match the configured patch size");
    }
    const int w = raster.width;
    const int h = raster.height;
    std::vector<std::array<double, kNumClasses>> probs(static_cast<std::size_t>(w) * h);

    auto run_rows = [&](int row_begin, int row_end) {
        std::vector<double> x(static_cast<std::size_t>(params.feature_dim));
        double z[kNumClasses];
        for (int row = row_begin; row < row_end; ++row) {
            for (int col = 0; col < w; ++col) {
                extract_features_into(raster, col, row, params.config.patch_size, x.data());
                logits(params, x.data(), z);
                softmax4(z, probs[static_cast<std::size_t>(row) * w + col].data());
            }
        }
    };

    n_threads = std::max(1, std::min(n_threads, h));
    if (n_threads == 1) {
        run_rows(0, h);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        const int per = (h + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            const int begin = t * per;
            const int end = std::min(begin + per, h);
            if (begin < end) {
                pool.emplace_back(run_rows, begin, end);
            }
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    return ProbabilityGrid::create(w, h, std::move(probs), raster.geo);
}

LabelGrid argmax_labels(const ProbabilityGrid& probs) {
    LabelGrid grid;
    grid.width = probs.width;
    grid.height = probs.height;
    grid.geo = probs.geo;
    grid.labels.resize(probs.probs.size());
    for (std::size_t i = 0; i < probs.probs.size(); ++i) {
        const auto& p = probs.probs[i];
        int best = 0;
        for (int c = 1; c < kNumClasses; ++c) {
            if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) {
                best = c;
            }
        }
        grid.labels[i] = static_cast<ClassId>(best);
    }
    return grid;
}

namespace {

nlohmann::json config_to_json(const SegmenterConfig& cfg) {
    nlohmann::json j;
    j["patch_size"] = cfg.patch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["batch_size"] = cfg.batch_size;
    j["max_epochs"] = cfg.max_epochs;
    j["seed"] = cfg.seed;
    j["include_unknown_as_class"] = cfg.include_unknown_as_class;
    return j;
}

SegmenterConfig config_from_json(const nlohmann::json& j) {
    SegmenterConfig cfg;
    cfg.patch_size = j.at("patch_size").get<int>();
    cfg.learning_rate = j.at("learning_rate").get<double>();
    cfg.batch_size = j.at("batch_size").get<int>();
    cfg.max_epochs = j.at("max_epochs").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.include_unknown_as_class = j.at("include_unknown_as_class").get<bool>();
    return cfg;
}

}  // namespace

void save_params(const SegmenterParams& params, const std::string& path) {
    nlohmann::json j;
    j["feature_dim"] = params.feature_dim;
    nlohmann::json rows = nlohmann::json::array();
    // Serialized feature-major: feature_dim rows of kNumClasses columns.
    for (int f = 0; f < params.feature_dim; ++f) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < kNumClasses; ++c) {
            row.push_back(params.weight(c, f));
        }
        rows.push_back(std::move(row));
    }
    j["weights"] = std::move(rows);
    j["bias"] = params.bias;
    j["config"] = config_to_json(params.config);

    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("IoFailure", "cannot open " + path + " for writing");
    }
    out << j.dump() << "\n";
}

SegmenterParams load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("MissingFile", "cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
        SegmenterParams params;
        params.feature_dim = j.at("feature_dim").get<int>();
        params.config = config_from_json(j.at("config"));
        const auto& rows = j.at("weights");
        if (static_cast<int>(rows.size()) != params.feature_dim) {
            throw Error("MalformedParams", "weight row count mismatch in " + path);
        }
        params.weights.assign(static_cast<std::size_t>(params.feature_dim) * kNumClasses, 0.0);
        for (int f = 0; f < params.feature_dim; ++f) {
            const auto& row = rows[static_cast<std::size_t>(f)];
            for (int c = 0; c < kNumClasses; ++c) {
                params.weights[static_cast<std::size_t>(c) * params.feature_dim + f] =
                    row.at(static_cast<std::size_t>(c)).get<double>();
            }
        }
        const auto& bias = j.at("bias");
        for (int c = 0; c < kNumClasses; ++c) {
            params.bias[static_cast<std::size_t>(c)] = bias.at(static_cast<std::size_t>(c)).get<double>();
        }
        return params;
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedParams", std::string(e.what()) + " in " + path);
    }
}

void save_train_report(const TrainReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("IoFailure", "cannot open " + path + " for writing");
    }
    for (std::size_t epoch = 0; epoch < report.epoch_losses.size(); ++epoch) {
        nlohmann::json j;
        j["epoch"] = epoch;
        j["loss"] = report.epoch_losses[epoch];
        if (epoch + 1 == report.epoch_losses.size()) {
            j["final"] = true;
            j["seed"] = report.seed;
            j["lambda_u"] = report.weights.lambda_u;
            j["lambda_w"] = report.weights.lambda_w;
            j["lambda_o"] = report.weights.lambda_o;
            j["lambda_b"] = report.weights.lambda_b;
        }
        out << j.dump() << "\n";
    }
}

}  // namespace sparseseg
