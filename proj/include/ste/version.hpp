#ifndef STE_VERSION_HPP
#define STE_VERSION_HPP

namespace ste {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ste

#endif  // STE_VERSION_HPP
