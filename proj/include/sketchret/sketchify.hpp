#pragma once

#include "sketchret/image.hpp"
#include "sketchret/random.hpp"

namespace sketchret {

enum class EdgeMethod { Canny, Laplacian };

struct SketchParams {
  EdgeMethod method = EdgeMethod::Canny;
  double canny_low = 50.0;
  double canny_high = 150.0;
  double gaussian_sigma = 1.4;
  double laplacian_threshold = 30.0;
  int dilation_radius = 3;

  void validate() const;
};

/// Gaussian blur, Sobel gradients, non-maximum suppression, double threshold and
/// hysteresis. Thresholds apply to the L2 Sobel magnitude on the [0, 255] scale.
ViewImage canny(const ViewImage& img, const SketchParams& p = {});

/// |4 x - (N + S + E + W)| > threshold, borders replicated.
ViewImage laplacian_edge(const ViewImage& img, const SketchParams& p = {});

/// Square structuring element of side 2 radius + 1. Input must be binary.
ViewImage dilate(const ViewImage& img, int radius);

ViewImage invert(const ViewImage& img);

/// Sketch input (dark strokes on light paper) is binarized at 128 and inverted, cropped to a
/// square around the content bounding box, resized to out_size - 2 pad and centered on an
/// out_size canvas. Output content is 255 on 0. Throws EmptySketchError for blank input.
ViewImage crop_to_content(const ViewImage& img, int out_size = 224, int pad = 5);

class EmptySketchError : public std::runtime_error {
 public:
  EmptySketchError() : std::runtime_error("empty sketch") {}
};

/// Erases whole 8-connected strokes (long strokes are split along their traversal order
/// first) until round(fraction * edge_pixels) pixels are gone. Never adds pixels.
ViewImage random_edge_removal(const ViewImage& img, double fraction, Rng& rng);

/// Rendered view -> dark-on-light binary sketch. The Laplacian path applies the grey
/// background color reversal before edge extraction.
ViewImage sketchify_view(const ViewImage& shaded, const SketchParams& p);
ViewImage sketchify_view(const ViewImage& shaded, const SketchParams& p, EdgeMethod method);

struct PreprocessParams {
  int out_size = 224;
  int pad = 5;
};

/// Shared query/gallery preprocessing: crop_to_content, then dilation by
/// `sketch.dilation_radius`. Output content is 255.
ViewImage preprocess_sketch(const ViewImage& sketch, const SketchParams& sketch_params,
                            const PreprocessParams& p = {});

}  // namespace sketchret
