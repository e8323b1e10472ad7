#pragma once

#include <string>

namespace vst {

// Porter's suffix-stripping stemmer (the 1980 algorithm), used as the stem
// stage of the METEOR alignment. Words of length <= 2 are returned as-is.
std::string porter_stem(const std::string& word);

}  // namespace vst
