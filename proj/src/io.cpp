#include "keepaug/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace keepaug {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open for writing: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open for reading: " + path);
    return in;
}

void put_u32le(std::ofstream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::ifstream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) fail(path + ": truncated header");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

} // namespace

void write_raw_tensor(const std::string& path, const RawTensor& t) {
    if (t.h < 1 || t.w < 1 || t.c < 1)
        fail("raw tensor: dims must be positive");
    if (t.data.size() != static_cast<size_t>(t.h) * t.w * t.c)
        fail("raw tensor: data length != H*W*C");
    for (double v : t.data)
        if (!std::isfinite(v)) fail("raw tensor: non-finite value");
    std::ofstream out = open_out(path);
    out.write("KAT1", 4);
    put_u32le(out, static_cast<uint32_t>(t.h));
    put_u32le(out, static_cast<uint32_t>(t.w));
    put_u32le(out, static_cast<uint32_t>(t.c));
    std::vector<unsigned char> buf(t.data.size() * 4);
    for (size_t i = 0; i < t.data.size(); ++i) {
        uint32_t bits = std::bit_cast<uint32_t>(static_cast<float>(t.data[i]));
        buf[4 * i + 0] = static_cast<unsigned char>(bits);
        buf[4 * i + 1] = static_cast<unsigned char>(bits >> 8);
        buf[4 * i + 2] = static_cast<unsigned char>(bits >> 16);
        buf[4 * i + 3] = static_cast<unsigned char>(bits >> 24);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!out) fail("raw tensor: write failed: " + path);
}

RawTensor read_raw_tensor(const std::string& path) {
    std::ifstream in = open_in(path);
    char magic[4];
    if (!in.read(magic, 4)) fail(path + ": truncated magic");
    if (std::memcmp(magic, "KAT1", 4) != 0) fail(path + ": bad magic, expected KAT1");
    RawTensor t;
    t.h = static_cast<int>(get_u32le(in, path));
    t.w = static_cast<int>(get_u32le(in, path));
    t.c = static_cast<int>(get_u32le(in, path));
    if (t.h < 1 || t.w < 1 || t.c < 1) fail(path + ": non-positive dims");
    size_t count = static_cast<size_t>(t.h) * t.w * t.c;
    std::vector<unsigned char> buf(count * 4);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
        fail(path + ": truncated payload, expected " + std::to_string(16 + 4 * count) + " bytes");
    in.peek();
    if (!in.eof()) fail(path + ": trailing bytes after payload");
    t.data.resize(count);
    for (size_t i = 0; i < count; ++i) {
        uint32_t bits = static_cast<uint32_t>(buf[4 * i]) | (static_cast<uint32_t>(buf[4 * i + 1]) << 8) |
                        (static_cast<uint32_t>(buf[4 * i + 2]) << 16) |
                        (static_cast<uint32_t>(buf[4 * i + 3]) << 24);
        float f = std::bit_cast<float>(bits);
        if (!std::isfinite(f)) fail(path + ": non-finite value at element " + std::to_string(i));
        t.data[i] = static_cast<double>(f);
    }
    return t;
}

void write_raw_image(const std::string& path, const Image& image) {
    RawTensor t{image.height, image.width, image.channels, image.data};
    write_raw_tensor(path, t);
}

Image read_raw_image(const std::string& path) {
    RawTensor t = read_raw_tensor(path);
    if (t.c != 1 && t.c != 3) fail(path + ": image channels must be 1 or 3");
    Image img(t.h, t.w, t.c);
    img.data = std::move(t.data);
    return img;
}

void write_raw_map(const std::string& path, const SaliencyMap& map) {
    RawTensor t{map.height, map.width, 1, map.data};
    write_raw_tensor(path, t);
}

SaliencyMap read_raw_map(const std::string& path) {
    RawTensor t = read_raw_tensor(path);
    if (t.c != 1) fail(path + ": saliency map must have C=1, got C=" + std::to_string(t.c));
    SaliencyMap map(t.h, t.w);
    for (size_t i = 0; i < t.data.size(); ++i) {
        if (t.data[i] < 0.0)
            fail(path + ": negative saliency value at element " + std::to_string(i));
        map.data[i] = t.data[i];
    }
    return map;
}

namespace {

inline unsigned char quantize255(double v) {
    double u = std::floor(v * 255.0 + 0.5);
    if (u < 0.0) u = 0.0;
    if (u > 255.0) u = 255.0;
    return static_cast<unsigned char>(u);
}

// Skips PNM whitespace and '#' comments, then parses a decimal integer.
// Reports the byte offset of anything unexpected.
int parse_pnm_int(const std::vector<unsigned char>& bytes, size_t& pos, const std::string& path) {
    while (pos < bytes.size()) {
        unsigned char ch = bytes[pos];
        if (ch == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (std::isspace(ch)) {
            ++pos;
        } else {
            break;
        }
    }
    if (pos >= bytes.size())
        fail(path + ": truncated header at byte " + std::to_string(pos));
    if (!std::isdigit(bytes[pos]))
        fail(path + ": expected digit at byte " + std::to_string(pos));
    long v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
        v = v * 10 + (bytes[pos] - '0');
        if (v > 1 << 30) fail(path + ": absurd value in header at byte " + std::to_string(pos));
        ++pos;
    }
    return static_cast<int>(v);
}

} // namespace

void write_ppm(const std::string& path, const Image& image) {
    if (image.channels != 1 && image.channels != 3)
        fail("write_ppm: channels must be 1 or 3");
    std::ofstream out = open_out(path);
    out << "P6\n" << image.width << " " << image.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<size_t>(image.width) * 3);
    for (int i = 0; i < image.height; ++i) {
        for (int j = 0; j < image.width; ++j)
            for (int c = 0; c < 3; ++c)
                row[static_cast<size_t>(j) * 3 + c] =
                    quantize255(image.at(i, j, image.channels == 1 ? 0 : c));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) fail("write_ppm: write failed: " + path);
}

Image read_ppm(const std::string& path) {
    std::ifstream in = open_in(path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        fail(path + ": not a P6 ppm (byte 0)");
    size_t pos = 2;
    int w = parse_pnm_int(bytes, pos, path);
    int h = parse_pnm_int(bytes, pos, path);
    int maxval = parse_pnm_int(bytes, pos, path);
    if (w < 1 || h < 1) fail(path + ": non-positive dims in header");
    if (maxval != 255)
        fail(path + ": unsupported maxval " + std::to_string(maxval) + " at byte " + std::to_string(pos));
    if (pos >= bytes.size() || !std::isspace(bytes[pos]))
        fail(path + ": expected single whitespace after maxval at byte " + std::to_string(pos));
    ++pos; // exactly one whitespace byte separates header and payload
    size_t need = static_cast<size_t>(w) * h * 3;
    if (bytes.size() - pos < need)
        fail(path + ": truncated payload at byte " + std::to_string(bytes.size()) +
             ", need " + std::to_string(pos + need) + " bytes");
    Image img(h, w, 3);
    for (size_t i = 0; i < need; ++i)
        img.data[i] = bytes[pos + i] / 255.0;
    return img;
}

Dataset read_cifar10(const std::string& path) {
    constexpr size_t kRecord = 3073;
    constexpr int kSide = 32;
    std::ifstream in = open_in(path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.empty() || bytes.size() % kRecord != 0)
        fail(path + ": size " + std::to_string(bytes.size()) + " is not a positive multiple of 3073");
    Dataset data;
    size_t n = bytes.size() / kRecord;
    data.records.reserve(n);
    int max_label = 0;
    for (size_t r = 0; r < n; ++r) {
        const unsigned char* rec = bytes.data() + r * kRecord;
        DatasetRecord d;
        d.index = r;
        d.label = rec[0];
        max_label = std::max(max_label, d.label);
        d.image = Image(kSide, kSide, 3);
        for (int c = 0; c < 3; ++c) {
            const unsigned char* plane = rec + 1 + c * kSide * kSide;
            for (int i = 0; i < kSide; ++i)
                for (int j = 0; j < kSide; ++j)
                    d.image.at(i, j, c) = plane[i * kSide + j] / 255.0;
        }
        data.records.push_back(std::move(d));
    }
    data.num_classes = std::max(2, max_label + 1);
    return data;
}

void write_cifar10(const std::string& path, const Dataset& data) {
    constexpr int kSide = 32;
    std::ofstream out = open_out(path);
    std::vector<unsigned char> rec(3073);
    for (const DatasetRecord& d : data.records) {
        if (d.image.height != kSide || d.image.width != kSide || d.image.channels != 3)
            fail("write_cifar10: records must be 32x32x3");
        if (d.label < 0 || d.label > 255) fail("write_cifar10: label out of byte range");
        rec[0] = static_cast<unsigned char>(d.label);
        for (int c = 0; c < 3; ++c) {
            unsigned char* plane = rec.data() + 1 + c * kSide * kSide;
            for (int i = 0; i < kSide; ++i)
                for (int j = 0; j < kSide; ++j)
                    plane[i * kSide + j] = quantize255(d.image.at(i, j, c));
        }
        out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    }
    if (!out) fail("write_cifar10: write failed: " + path);
}

namespace {

const char* kConfigKeys[] = {"mode", "tau", "region", "policy", "saliency",
                             "seed", "stride", "parallelism"};
const char* kPolicyKeys[] = {"ops", "n_ops", "magnitude"};
const char* kSaliencyKeys[] = {"variant", "factor", "file"};

template <size_t N>
void reject_unknown(const json& obj, const char* const (&known)[N], const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) { ok = true; break; }
        if (!ok) fail("config: unknown key \"" + where + it.key() + "\"");
    }
}

} // namespace

AugmentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(std::string("config: ") + e.what());
    }
    if (!j.is_object()) fail("config: top level must be a JSON object");
    reject_unknown(j, kConfigKeys, "");

    AugmentConfig cfg;
    try {
        if (j.contains("mode")) cfg.mode = augment_mode_from_name(j["mode"].get<std::string>());
        if (j.contains("tau")) cfg.tau = j["tau"].get<double>();
        if (j.contains("region")) {
            const json& r = j["region"];
            if (r.is_number_integer()) {
                cfg.region.h = cfg.region.w = r.get<int>();
            } else if (r.is_array() && r.size() == 2) {
                cfg.region.h = r[0].get<int>();
                cfg.region.w = r[1].get<int>();
            } else {
                fail("config: \"region\" must be an integer or [h, w]");
            }
        }
        if (j.contains("policy")) {
            const json& p = j["policy"];
            if (!p.is_object()) fail("config: \"policy\" must be an object");
            reject_unknown(p, kPolicyKeys, "policy.");
            if (p.contains("ops")) {
                cfg.policy.ops.clear();
                for (const json& name : p["ops"])
                    cfg.policy.ops.push_back(policy_op_from_name(name.get<std::string>()));
            }
            if (p.contains("n_ops")) cfg.policy.n_ops = p["n_ops"].get<int>();
            if (p.contains("magnitude")) cfg.policy.magnitude = p["magnitude"].get<int>();
        }
        if (j.contains("saliency")) {
            const json& s = j["saliency"];
            if (!s.is_object()) fail("config: \"saliency\" must be an object");
            reject_unknown(s, kSaliencyKeys, "saliency.");
            if (s.contains("variant"))
                cfg.saliency.variant = saliency_variant_from_name(s["variant"].get<std::string>());
            if (s.contains("factor")) cfg.saliency.factor = s["factor"].get<int>();
            if (s.contains("file")) cfg.saliency.file = s["file"].get<std::string>();
        }
        if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
        if (j.contains("stride")) cfg.stride = j["stride"].get<int>();
        if (j.contains("parallelism")) cfg.parallelism = j["parallelism"].get<int>();
    } catch (const json::exception& e) {
        fail(std::string("config: ") + e.what());
    }

    try {
        cfg.check_valid();
    } catch (const std::exception& e) {
        fail(e.what()); // check_valid names the offending key
    }
    return cfg;
}

std::string config_to_json_text(const AugmentConfig& cfg) {
    json p;
    json ops = json::array();
    for (PolicyOp op : cfg.policy.ops) ops.push_back(policy_op_name(op));
    p["ops"] = ops;
    p["n_ops"] = cfg.policy.n_ops;
    p["magnitude"] = cfg.policy.magnitude;

    json s;
    s["variant"] = saliency_variant_name(cfg.saliency.variant);
    s["factor"] = cfg.saliency.factor;
    if (!cfg.saliency.file.empty()) s["file"] = cfg.saliency.file;

    json j;
    j["mode"] = augment_mode_name(cfg.mode);
    j["tau"] = cfg.tau;
    j["region"] = json::array({cfg.region.h, cfg.region.w});
    j["policy"] = p;
    j["saliency"] = s;
    j["seed"] = cfg.seed;
    j["stride"] = cfg.stride;
    j["parallelism"] = cfg.parallelism;
    return j.dump(2) + "\n";
}

AugmentConfig read_config(const std::string& path) {
    std::ifstream in = open_in(path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

void write_config(const std::string& path, const AugmentConfig& cfg) {
    std::ofstream out = open_out(path);
    out << config_to_json_text(cfg);
    if (!out) fail("write_config: write failed: " + path);
}

namespace {

void write_param(const std::string& dir, const std::string& name,
                 int h, int w, int c, const std::vector<double>& data, json& tensors) {
    RawTensor t{h, w, c, data};
    std::string file = name + ".kat";
    write_raw_tensor((fs::path(dir) / file).string(), t);
    tensors[name] = file;
}

std::vector<double> read_param(const std::string& dir, const json& tensors,
                               const std::string& name, size_t expect) {
    if (!tensors.contains(name)) fail("model manifest: missing tensor \"" + name + "\"");
    RawTensor t = read_raw_tensor((fs::path(dir) / tensors[name].get<std::string>()).string());
    if (t.data.size() != expect)
        fail("model tensor \"" + name + "\": expected " + std::to_string(expect) +
             " values, got " + std::to_string(t.data.size()));
    return t.data;
}

} // namespace

void save_model(const std::string& dir, const ToyNet& net) {
    fs::create_directories(dir);
    json tensors;
    for (size_t t = 0; t < net.blocks.size(); ++t) {
        const ConvBlock& b = net.blocks[t];
        std::string stem = "conv" + std::to_string(t + 1);
        write_param(dir, stem + "_w", b.out_c, b.in_c, 9, b.w, tensors);
        write_param(dir, stem + "_b", b.out_c, 1, 1, b.b, tensors);
    }
    write_param(dir, "fc_w", net.classes, net.feature_len(), 1, net.fc_w, tensors);
    write_param(dir, "fc_b", net.classes, 1, 1, net.fc_b, tensors);
    if (net.early_head) {
        write_param(dir, "head_w", net.classes, net.blocks[0].out_c, 1, net.head_w, tensors);
        write_param(dir, "head_b", net.classes, 1, 1, net.head_b, tensors);
    }

    json j;
    j["format"] = "keepaug-model-v1";
    j["input"] = {{"height", net.in_h}, {"width", net.in_w}, {"channels", net.in_c}};
    j["classes"] = net.classes;
    json chans = json::array();
    for (const ConvBlock& b : net.blocks) chans.push_back(b.out_c);
    j["block_channels"] = chans;
    j["early_head"] = net.early_head;
    j["nonlinearity"] = "softplus";
    j["tensors"] = tensors;
    std::ofstream out = open_out((fs::path(dir) / "manifest.json").string());
    out << j.dump(2) << "\n";
    if (!out) fail("save_model: manifest write failed");
}

ToyNet load_model(const std::string& dir) {
    std::string manifest_path = (fs::path(dir) / "manifest.json").string();
    std::ifstream in = open_in(manifest_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        fail(manifest_path + ": " + e.what());
    }
    if (j.value("format", "") != "keepaug-model-v1")
        fail(manifest_path + ": unsupported model format");

    ToyNet net;
    net.in_h = j["input"]["height"].get<int>();
    net.in_w = j["input"]["width"].get<int>();
    net.in_c = j["input"]["channels"].get<int>();
    net.classes = j["classes"].get<int>();
    const json& tensors = j["tensors"];

    int c_prev = net.in_c;
    int t = 0;
    for (const json& ch : j["block_channels"]) {
        ConvBlock b;
        b.in_c = c_prev;
        b.out_c = ch.get<int>();
        std::string stem = "conv" + std::to_string(++t);
        b.w = read_param(dir, tensors, stem + "_w", static_cast<size_t>(b.out_c) * b.in_c * 9);
        b.b = read_param(dir, tensors, stem + "_b", static_cast<size_t>(b.out_c));
        c_prev = b.out_c;
        net.blocks.push_back(std::move(b));
    }
    size_t feat = static_cast<size_t>(net.feature_len());
    net.fc_w = read_param(dir, tensors, "fc_w", static_cast<size_t>(net.classes) * feat);
    net.fc_b = read_param(dir, tensors, "fc_b", static_cast<size_t>(net.classes));
    net.early_head = j["early_head"].get<bool>();
    if (net.early_head) {
        net.head_w = read_param(dir, tensors, "head_w",
                                static_cast<size_t>(net.classes) * net.blocks.at(0).out_c);
        net.head_b = read_param(dir, tensors, "head_b", static_cast<size_t>(net.classes));
    }
    return net;
}

std::string external_map_path(const std::string& dir, uint64_t index) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06llu.kat", static_cast<unsigned long long>(index));
    return (fs::path(dir) / name).string();
}

std::vector<SaliencyMap> read_external_maps(const std::string& dir,
                                            const std::vector<DatasetRecord>& records) {
    std::vector<SaliencyMap> maps;
    maps.reserve(records.size());
    for (const DatasetRecord& r : records) {
        std::string path = external_map_path(dir, r.index);
        if (!fs::exists(path))
            fail("missing external saliency map for image index " + std::to_string(r.index) +
                 " (" + path + ")");
        maps.push_back(read_raw_map(path));
    }
    return maps;
}

} // namespace keepaug
