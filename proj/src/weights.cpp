#include "sparseseg/weights.hpp"

#include <algorithm>

namespace sparseseg {

ClassWeights class_weights(const PixelCounts& counts, std::optional<double> cap) {
    for (ClassId c : kAnnotatedClasses) {
        if (counts.for_class(c) <= 0) {
            throw Error("MissingClass",
                        "class '" + class_name(c) + "' has no pixels in the training split");
        }
    }
    if (cap && !(*cap > 0.0)) {
        throw Error("InvalidWeightCap", "weight cap must be > 0");
    }
    const auto n_k = static_cast<double>(counts.labeled());
    ClassWeights w;
    w.lambda_u = n_k / static_cast<double>(counts.labeled() + counts.unknown);
    w.lambda_w = n_k / static_cast<double>(counts.waterhole);
    w.lambda_o = n_k / static_cast<double>(counts.omuti);
    w.lambda_b = n_k / static_cast<double>(counts.bigtree);
    if (cap) {
        w.lambda_w = std::min(w.lambda_w, *cap);
        w.lambda_o = std::min(w.lambda_o, *cap);
        w.lambda_b = std::min(w.lambda_b, *cap);
    }
    return w;
}

}  // namespace sparseseg
