#ifndef KEEPAUG_TEST_HELPERS_HPP
#define KEEPAUG_TEST_HELPERS_HPP

#include <filesystem>
#include <random>
#include <string>

#include "keepaug/image.hpp"

namespace keepaug::test {

inline Image random_image(RngStream& rng, int h, int w, int c) {
    Image img(h, w, c);
    for (double& v : img.data) v = rng.next_double();
    return img;
}

inline SaliencyMap random_map(RngStream& rng, int h, int w) {
    SaliencyMap map(h, w);
    for (double& v : map.data) v = rng.next_double();
    return map;
}

inline bool images_identical(const Image& a, const Image& b) {
    return a.height == b.height && a.width == b.width && a.channels == b.channels &&
           a.data == b.data;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("keepaug_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace keepaug::test

#endif
