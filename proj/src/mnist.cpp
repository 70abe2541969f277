#include "xbar/mnist.hpp"

#include <cstring>
#include <fstream>
#include <zlib.h>

#include "xbar/errors.hpp"

namespace xbar {

namespace {

std::vector<std::uint8_t> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

bool is_gzip(const std::vector<std::uint8_t> &buf) {
  return buf.size() >= 2 && buf[0] == 0x1f && buf[1] == 0x8b;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t> &buf) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw ParseError("cannot initialize gzip decoder");
  std::vector<std::uint8_t> out;
  out.reserve(buf.size() * 4);
  std::uint8_t chunk[1 << 16];
  zs.next_in = const_cast<std::uint8_t *>(buf.data());
  zs.avail_in = static_cast<uInt>(buf.size());
  int ret = Z_OK;
  do {
    zs.next_out = chunk;
    zs.avail_out = sizeof(chunk);
    ret = inflate(&zs, Z_NO_FLUSH);
    if (ret != Z_OK && ret != Z_STREAM_END) {
      inflateEnd(&zs);
      throw ParseError("corrupt gzip stream");
    }
    out.insert(out.end(), chunk, chunk + sizeof(chunk) - zs.avail_out);
  } while (ret != Z_STREAM_END);
  inflateEnd(&zs);
  return out;
}

std::uint32_t read_be32(const std::vector<std::uint8_t> &buf, std::size_t off) {
  if (off + 4 > buf.size()) throw ParseError("truncated IDX header");
  return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
         (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

void write_be32(std::vector<std::uint8_t> &buf, std::uint32_t v) {
  buf.push_back(static_cast<std::uint8_t>(v >> 24));
  buf.push_back(static_cast<std::uint8_t>(v >> 16));
  buf.push_back(static_cast<std::uint8_t>(v >> 8));
  buf.push_back(static_cast<std::uint8_t>(v));
}

} // namespace

ImageDataset load_mnist_buffers(const std::vector<std::uint8_t> &images_raw,
                                const std::vector<std::uint8_t> &labels_raw) {
  const auto &images = is_gzip(images_raw) ? gunzip(images_raw) : images_raw;
  const auto &labels = is_gzip(labels_raw) ? gunzip(labels_raw) : labels_raw;

  if (read_be32(images, 0) != 0x00000803u)
    throw ParseError("bad IDX magic in image file (expected 0x00000803)");
  if (read_be32(labels, 0) != 0x00000801u)
    throw ParseError("bad IDX magic in label file (expected 0x00000801)");

  const std::uint32_t n_images = read_be32(images, 4);
  const std::uint32_t rows = read_be32(images, 8);
  const std::uint32_t cols = read_be32(images, 12);
  const std::uint32_t n_labels = read_be32(labels, 4);
  if (n_images != n_labels)
    throw ConfigError("image/label count mismatch: " + std::to_string(n_images) + " images vs " +
                      std::to_string(n_labels) + " labels");
  const std::size_t need = 16 + std::size_t(n_images) * rows * cols;
  if (images.size() < need) throw ParseError("truncated IDX image payload");
  if (labels.size() < 8 + n_labels) throw ParseError("truncated IDX label payload");

  int crop = 0;
  if (rows == 28 && cols == 28) crop = 4;
  else if (rows != 20 || cols != 20)
    throw ConfigError("unsupported image size " + std::to_string(rows) + "x" +
                      std::to_string(cols) + " (expected 28x28 or 20x20)");

  ImageDataset ds;
  ds.image_rows = static_cast<int>(rows) - 2 * crop;
  ds.image_cols = static_cast<int>(cols) - 2 * crop;
  ds.images.reserve(n_images);
  ds.labels.reserve(n_images);
  for (std::uint32_t k = 0; k < n_images; ++k) {
    const std::size_t base = 16 + std::size_t(k) * rows * cols;
    std::vector<double> img;
    img.reserve(std::size_t(ds.image_rows) * ds.image_cols);
    for (int r = crop; r < static_cast<int>(rows) - crop; ++r)
      for (int c = crop; c < static_cast<int>(cols) - crop; ++c)
        img.push_back(images[base + std::size_t(r) * cols + c] / 255.0);
    ds.images.push_back(std::move(img));
    const int label = labels[8 + k];
    if (label < 0 || label > 9) throw ParseError("label out of range at index " + std::to_string(k));
    ds.labels.push_back(label);
  }
  return ds;
}

ImageDataset load_mnist(const std::string &images_path, const std::string &labels_path) {
  return load_mnist_buffers(read_file(images_path), read_file(labels_path));
}

std::vector<std::uint8_t> encode_idx_images(int count, int rows, int cols,
                                            const std::vector<std::uint8_t> &pixels) {
  if (pixels.size() != std::size_t(count) * rows * cols)
    throw ContractError("pixel buffer size does not match count*rows*cols");
  std::vector<std::uint8_t> out;
  write_be32(out, 0x00000803u);
  write_be32(out, static_cast<std::uint32_t>(count));
  write_be32(out, static_cast<std::uint32_t>(rows));
  write_be32(out, static_cast<std::uint32_t>(cols));
  out.insert(out.end(), pixels.begin(), pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const std::vector<std::uint8_t> &labels) {
  std::vector<std::uint8_t> out;
  write_be32(out, 0x00000801u);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

} // namespace xbar
