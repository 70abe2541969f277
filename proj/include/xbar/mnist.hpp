#pragma once

// IDX-format image/label ingestion (optionally gzip-compressed), with
// center-cropping of 28x28 sources to the 20x20 input the evaluation MLP
// expects.

#include <cstdint>
#include <string>
#include <vector>

namespace xbar {

struct ImageDataset {
  int image_rows = 0;
  int image_cols = 0;
  std::vector<std::vector<double>> images; // pixels in [0,1], row-major
  std::vector<int> labels;                 // 0-9

  std::size_t size() const { return images.size(); }
};

// Parses IDX image (magic 0x00000803) and label (magic 0x00000801) files.
// 28x28 images are center-cropped by a 4-pixel border to 20x20; 20x20
// sources pass through unchanged.
ImageDataset load_mnist(const std::string &images_path, const std::string &labels_path);

// In-memory variants, used by tests and the gzip path.
ImageDataset load_mnist_buffers(const std::vector<std::uint8_t> &images,
                                const std::vector<std::uint8_t> &labels);

// Serializes fabricated data back to IDX, for fixtures and smoke tests.
std::vector<std::uint8_t> encode_idx_images(int count, int rows, int cols,
                                            const std::vector<std::uint8_t> &pixels);
std::vector<std::uint8_t> encode_idx_labels(const std::vector<std::uint8_t> &labels);

} // namespace xbar
