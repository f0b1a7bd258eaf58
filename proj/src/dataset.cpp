#include "sanet/dataset.hpp"

#include <algorithm>
#include <filesystem>

namespace sanet {

namespace fs = std::filesystem;

Tensor image_to_tensor(const GrayImage& image) {
  Tensor t = Tensor::zeros({1, image.height, image.width});
  for (size_t i = 0; i < image.pixels.size(); ++i)
    t.data()[i] = image.pixels[i] / 255.0;
  return t;
}

Dataset load_dataset(const std::string& dir, int n_classes) {
  const fs::path images_dir = fs::path(dir) / "images";
  const fs::path masks_dir = fs::path(dir) / "masks";
  if (!fs::is_directory(images_dir) || !fs::is_directory(masks_dir))
    throw DataError("dataset directory must contain images/ and masks/: " + dir);

  std::vector<fs::path> image_files;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    const auto ext = entry.path().extension().string();
    if (ext == ".png" || ext == ".pgm") image_files.push_back(entry.path());
  }
  std::sort(image_files.begin(), image_files.end());
  if (image_files.empty()) throw DataError("dataset has no images: " + dir);

  Dataset dataset;
  dataset.reserve(image_files.size());
  for (const auto& image_path : image_files) {
    const std::string stem = image_path.stem().string();
    GrayImage image = image_path.extension() == ".png"
                          ? read_png_gray(image_path.string())
                          : read_pgm(image_path.string());
    const fs::path mask_path = masks_dir / (stem + ".png");
    if (!fs::exists(mask_path))
      throw DataError("missing mask for image: " + stem);
    ClassMask mask = read_png_mask(mask_path.string());
    if (mask.height != image.height || mask.width != image.width)
      throw DataError("mask shape differs from image: " + stem);
    for (uint8_t v : mask.values)
      if (v >= n_classes)
        throw DataError("mask value out of range in " + stem);
    dataset.push_back(Sample{stem, image_to_tensor(image), std::move(mask)});
  }
  return dataset;
}

}  // namespace sanet
