#include "granulo/filter.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

namespace granulo {

namespace {

// Largest block whose worst-case sum (255 * block^2) still fits in 32 bits;
// the summed-area table relies on that for its modular arithmetic.
constexpr int kMaxBlockSize = 4095;

inline std::uint8_t round_to_u8(double v) {
    const double r = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

/// Summed-area table with one leading zero row and column. Entries wrap
/// modulo 2^32; differences of entries are exact as long as the true
/// rectangle sum fits in 32 bits.
class IntegralImage {
public:
    explicit IntegralImage(const GrayImage& img)
        : width_(img.width()), height_(img.height()),
          table_(static_cast<std::size_t>(width_ + 1) * static_cast<std::size_t>(height_ + 1), 0u) {
        const std::size_t stride = static_cast<std::size_t>(width_) + 1;
        for (int y = 0; y < height_; ++y) {
            auto src = img.row(y);
            std::uint32_t running = 0;
            const std::uint32_t* above = table_.data() + static_cast<std::size_t>(y) * stride;
            std::uint32_t* cur = table_.data() + static_cast<std::size_t>(y + 1) * stride;
            for (int x = 0; x < width_; ++x) {
                running += src[static_cast<std::size_t>(x)];
                cur[x + 1] = above[x + 1] + running;
            }
        }
    }

    /// Sum over the inclusive rectangle [x0,x1] x [y0,y1].
    std::uint32_t sum(int x0, int y0, int x1, int y1) const noexcept {
        const std::size_t stride = static_cast<std::size_t>(width_) + 1;
        const std::uint32_t* top = table_.data() + static_cast<std::size_t>(y0) * stride;
        const std::uint32_t* bottom = table_.data() + static_cast<std::size_t>(y1 + 1) * stride;
        return bottom[x1 + 1] - top[x1 + 1] - bottom[x0] + top[x0];
    }

private:
    int width_;
    int height_;
    std::vector<std::uint32_t> table_;
};

}  // namespace

void BlurParams::validate() const {
    if (ksize < 1 || ksize % 2 == 0) {
        throw InvalidArgument("blur ksize must be odd and >= 1, got " + std::to_string(ksize));
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidArgument("blur sigma must be positive");
    }
}

void ThresholdParams::validate() const {
    if (block_size < 3 || block_size % 2 == 0) {
        throw InvalidArgument("threshold block size must be odd and >= 3, got " +
                              std::to_string(block_size));
    }
    if (block_size > kMaxBlockSize) {
        throw InvalidArgument("threshold block size must not exceed " + std::to_string(kMaxBlockSize));
    }
    if (!std::isfinite(c)) {
        throw InvalidArgument("threshold c must be finite");
    }
}

std::vector<double> gaussian_kernel(const BlurParams& params) {
    params.validate();
    const int n = params.ksize;
    const double mid = (n - 1) / 2.0;
    const double denom = 2.0 * params.sigma * params.sigma;
    std::vector<double> w(static_cast<std::size_t>(n));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d = i - mid;
        w[static_cast<std::size_t>(i)] = std::exp(-d * d / denom);
        total += w[static_cast<std::size_t>(i)];
    }
    for (auto& v : w) {
        v /= total;
    }
    return w;
}

GrayImage gaussian_blur(const GrayImage& img, const BlurParams& params) {
    const std::vector<double> kernel = gaussian_kernel(params);
    const int radius = params.ksize / 2;
    const int w = img.width();
    const int h = img.height();

    std::vector<float> kf(kernel.begin(), kernel.end());
    std::vector<float> horiz(static_cast<std::size_t>(w) * static_cast<std::size_t>(h));
    std::vector<int> col_index(static_cast<std::size_t>(w + 2 * radius));
    for (int i = 0; i < w + 2 * radius; ++i) {
        col_index[static_cast<std::size_t>(i)] = std::clamp(i - radius, 0, w - 1);
    }
    for (int y = 0; y < h; ++y) {
        auto src = img.row(y);
        float* dst = horiz.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(w);
        for (int x = 0; x < w; ++x) {
            float acc = 0.0f;
            for (int k = 0; k < params.ksize; ++k) {
                acc += kf[static_cast<std::size_t>(k)] *
                       src[static_cast<std::size_t>(col_index[static_cast<std::size_t>(x + k)])];
            }
            dst[x] = acc;
        }
    }

    GrayImage out(w, h);
    std::vector<float> acc(static_cast<std::size_t>(w));
    for (int y = 0; y < h; ++y) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (int k = 0; k < params.ksize; ++k) {
            const int sy = std::clamp(y + k - radius, 0, h - 1);
            const float* src = horiz.data() + static_cast<std::size_t>(sy) * static_cast<std::size_t>(w);
            const float wk = kf[static_cast<std::size_t>(k)];
            for (int x = 0; x < w; ++x) {
                acc[static_cast<std::size_t>(x)] += wk * src[x];
            }
        }
        auto dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            dst[static_cast<std::size_t>(x)] = round_to_u8(acc[static_cast<std::size_t>(x)]);
        }
    }
    return out;
}

BinaryImage adaptive_threshold(const GrayImage& img, const ThresholdParams& params) {
    params.validate();
    const int w = img.width();
    const int h = img.height();
    const int r = params.block_size / 2;
    const double n = static_cast<double>(params.block_size) * params.block_size;
    const IntegralImage sat(img);

    const std::uint32_t corner_tl = img.at(0, 0);
    const std::uint32_t corner_tr = img.at(w - 1, 0);
    const std::uint32_t corner_bl = img.at(0, h - 1);
    const std::uint32_t corner_br = img.at(w - 1, h - 1);

    BinaryImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const int y0 = std::max(0, y - r);
        const int y1 = std::min(h - 1, y + r);
        const std::uint32_t extra_top = static_cast<std::uint32_t>(std::max(0, r - y));
        const std::uint32_t extra_bottom = static_cast<std::uint32_t>(std::max(0, y + r - (h - 1)));
        auto src = img.row(y);
        auto dst = out.row(y);
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r);
            const int x1 = std::min(w - 1, x + r);
            const std::uint32_t extra_left = static_cast<std::uint32_t>(std::max(0, r - x));
            const std::uint32_t extra_right = static_cast<std::uint32_t>(std::max(0, x + r - (w - 1)));

            // Replicated border pixels repeat the edge rows/columns, so their
            // contribution is a weighted edge strip plus the four corners.
            std::uint32_t sum = sat.sum(x0, y0, x1, y1);
            if (extra_left | extra_right | extra_top | extra_bottom) {
                if (extra_left) sum += extra_left * sat.sum(0, y0, 0, y1);
                if (extra_right) sum += extra_right * sat.sum(w - 1, y0, w - 1, y1);
                if (extra_top) sum += extra_top * sat.sum(x0, 0, x1, 0);
                if (extra_bottom) sum += extra_bottom * sat.sum(x0, h - 1, x1, h - 1);
                sum += extra_left * extra_top * corner_tl + extra_right * extra_top * corner_tr +
                       extra_left * extra_bottom * corner_bl + extra_right * extra_bottom * corner_br;
            }
            const double threshold = static_cast<double>(sum) / n - params.c;
            dst[static_cast<std::size_t>(x)] =
                static_cast<double>(src[static_cast<std::size_t>(x)]) <= threshold ? 1 : 0;
        }
    }
    return out;
}

}  // namespace granulo
