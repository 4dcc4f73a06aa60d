#pragma once

#include <cstdint>
#include <vector>

// Hand-authored IDX pair: four 2x3 images, labels {0, 1, 2, 1}.
namespace fedshield::testing {

inline const std::vector<std::uint8_t> kIdxImages = {
    0x00, 0x00, 0x08, 0x03,  // magic: unsigned byte, 3 dims
    0x00, 0x00, 0x00, 0x04,  // count
    0x00, 0x00, 0x00, 0x02,  // rows
    0x00, 0x00, 0x00, 0x03,  // cols
    0x00, 0xFF, 0x00, 0x80, 0x00, 0x01,  // image 0
    0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF,  // image 1
    0x00, 0x00, 0x00, 0x00, 0x00, 0x00,  // image 2
    0x01, 0x02, 0x03, 0x04, 0x05, 0x06,  // image 3
};

inline const std::vector<std::uint8_t> kIdxLabels = {
    0x00, 0x00, 0x08, 0x01,  // magic: unsigned byte, 1 dim
    0x00, 0x00, 0x00, 0x04,  // count
    0x00, 0x01, 0x02, 0x01,
};

// Pixel bytes in the fixture, row-major per image.
inline const std::uint8_t kIdxPixels[4][6] = {
    {0, 255, 0, 128, 0, 1},
    {255, 255, 255, 255, 255, 255},
    {0, 0, 0, 0, 0, 0},
    {1, 2, 3, 4, 5, 6},
};

}  // namespace fedshield::testing
