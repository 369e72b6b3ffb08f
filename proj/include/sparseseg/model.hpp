#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sparseseg/core.hpp"
#include "sparseseg/weights.hpp"

namespace sparseseg {

struct SegmenterConfig {
    int patch_size = 15;          // odd, >= 3
    double learning_rate = 0.001;
    int batch_size = 64;
    int max_epochs = 50;
    std::uint64_t seed = 0;
    bool include_unknown_as_class = true;

    void validate() const;
};

// Multinomial logistic regression over patch features. Weights are stored
// class-major: weight(c, f) = weights[c * feature_dim + f].
struct SegmenterParams {
    int feature_dim = 0;
    std::vector<double> weights;
    std::array<double, kNumClasses> bias = {0, 0, 0, 0};
    SegmenterConfig config;

    double weight(int cls, int feature) const {
        return weights[static_cast<std::size_t>(cls) * feature_dim + feature];
    }
};

struct TrainReport {
    std::vector<double> epoch_losses;
    double final_loss = 0.0;
    int epochs_run = 0;
    ClassWeights weights;
    std::uint64_t seed = 0;
};

int feature_dim(int patch_size);

// Patch intensities scaled to [0,1] with clamp-to-edge padding, followed by
// the patch mean and population standard deviation.
std::vector<double> extract_features(const GrayRaster& raster, int col, int row, int patch_size);

// Mean over the batch of lambda_label * (-log p[label]); probabilities are
// clamped at 1e-12 before the log.
double weighted_ce_loss(const std::vector<std::array<double, kNumClasses>>& probs,
                        const std::vector<ClassId>& labels, const ClassWeights& w);

// Flat sample batch for the gradient entry points.
struct SampleBatch {
    int feature_dim = 0;
    std::vector<double> features;  // size() * feature_dim, row-major
    std::vector<ClassId> labels;

    std::size_t size() const { return labels.size(); }
    const double* sample(std::size_t i) const { return features.data() + i * feature_dim; }
};

struct Gradient {
    std::vector<double> weights;  // class-major, like SegmenterParams
    std::array<double, kNumClasses> bias = {0, 0, 0, 0};
};

double batch_loss(const SegmenterParams& params, const SampleBatch& batch,
                  const ClassWeights& w);
Gradient loss_gradient(const SegmenterParams& params, const SampleBatch& batch,
                       const ClassWeights& w);

// Minibatch SGD over the pixels of the region (whole grid when region is
// null). Deterministic for a fixed seed.
std::pair<SegmenterParams, TrainReport> train(const GrayRaster& raster,
                                              const LabelGrid& train_mask,
                                              const ClassWeights& w,
                                              const SegmenterConfig& cfg,
                                              const RegionMask* region = nullptr);

// Per-pixel softmax probabilities. Threads partition rows; the output is
// identical for any thread count.
ProbabilityGrid predict(const SegmenterParams& params, const GrayRaster& raster,
                        int n_threads = 1);

// Argmax with ties broken toward the lower class code.
LabelGrid argmax_labels(const ProbabilityGrid& probs);

void save_params(const SegmenterParams& params, const std::string& path);
SegmenterParams load_params(const std::string& path);
void save_train_report(const TrainReport& report, const std::string& path);  // JSON lines

}  // namespace sparseseg
