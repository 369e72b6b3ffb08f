#pragma once

#include <optional>

#include "sparseseg/core.hpp"

namespace sparseseg {

// Loss weights per class. For the annotated classes the weight is the
// labeled-pixel total over the class pixel count; the background weight is
// the labeled fraction of the training region.
struct ClassWeights {
    double lambda_u = 1.0;
    double lambda_w = 1.0;
    double lambda_o = 1.0;
    double lambda_b = 1.0;

    double for_class(ClassId c) const {
        switch (c) {
            case ClassId::Unknown: return lambda_u;
            case ClassId::Waterhole: return lambda_w;
            case ClassId::Omuti: return lambda_o;
            case ClassId::BigTree: return lambda_b;
        }
        return 1.0;
    }

    static ClassWeights uniform() { return {}; }
};

// Throws MissingClass when any annotated class has zero pixels; the caller
// must re-split. The optional cap clamps the three class weights for runs
// where extreme imbalance destabilizes training; off by default, the ratios
// are used raw.
ClassWeights class_weights(const PixelCounts& counts,
                           std::optional<double> cap = std::nullopt);

}  // namespace sparseseg
