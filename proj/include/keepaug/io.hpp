#ifndef KEEPAUG_IO_HPP
#define KEEPAUG_IO_HPP

#include <string>
#include <vector>

#include "keepaug/augment.hpp"
#include "keepaug/dataset.hpp"
#include "keepaug/image.hpp"
#include "keepaug/toynet.hpp"

namespace keepaug {

// Raw tensor file: magic "KAT1", three u32 little-endian dims H W C, then
// H*W*C float32 little-endian values, row-major channel-fastest. The payload
// is written little-endian regardless of host order and round-trips
// bit-exactly for finite values.
struct RawTensor {
    int h = 0, w = 0, c = 0;
    std::vector<double> data;
};

void write_raw_tensor(const std::string& path, const RawTensor& t);
RawTensor read_raw_tensor(const std::string& path);

void write_raw_image(const std::string& path, const Image& image);
Image read_raw_image(const std::string& path);

void write_raw_map(const std::string& path, const SaliencyMap& map); // C = 1
SaliencyMap read_raw_map(const std::string& path); // rejects negatives / C != 1

// Binary PPM (P6, maxval 255). Reading divides by 255; writing rounds
// half-up. Parse errors carry the byte offset. 1-channel images are written
// as gray RGB; reads always produce 3 channels.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

// CIFAR-10 binary records: 1 label byte + 3072 pixel bytes (R, G, B planes,
// 32x32 each). File size must be a multiple of 3073.
Dataset read_cifar10(const std::string& path);
void write_cifar10(const std::string& path, const Dataset& data);

// JSON config. Unknown keys are rejected by name; missing keys take the
// documented defaults (tau 0.6, region 16, n_ops 3, ...).
AugmentConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const AugmentConfig& cfg);
AugmentConfig read_config(const std::string& path);
void write_config(const std::string& path, const AugmentConfig& cfg);

// Model directory: manifest.json plus one raw tensor file per parameter.
void save_model(const std::string& dir, const ToyNet& net);
ToyNet load_model(const std::string& dir);

// External saliency maps: <dir>/<index, 6 digits>.kat, one per dataset record.
std::string external_map_path(const std::string& dir, uint64_t index);
std::vector<SaliencyMap> read_external_maps(const std::string& dir,
                                            const std::vector<DatasetRecord>& records);

} // namespace keepaug

#endif
