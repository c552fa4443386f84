#pragma once

#include <vector>

#include "granulo/raster.hpp"

namespace granulo {

struct BlurParams {
    int ksize = 5;       ///< odd kernel side length
    double sigma = 10.0; ///< Gaussian standard deviation in pixels

    void validate() const;
};

/// Local-mean threshold parameters: a pixel is foreground when it is at most
/// the block mean minus `c`.
struct ThresholdParams {
    int block_size = 301; ///< odd neighborhood side, >= 3
    double c = 72.0;

    void validate() const;
};

/// Normalized 1-D Gaussian weights centered at (ksize - 1) / 2.
std::vector<double> gaussian_kernel(const BlurParams& params);

/// Separable blur (horizontal pass, then vertical) with replicated edges.
GrayImage gaussian_blur(const GrayImage& img, const BlurParams& params);

/// Foreground iff I(x,y) <= mean(block around (x,y)) - c, edges replicated.
/// Block sums come from a summed-area table, so the cost per pixel does not
/// depend on block_size.
BinaryImage adaptive_threshold(const GrayImage& img, const ThresholdParams& params);

}  // namespace granulo
