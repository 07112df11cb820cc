#pragma once

#include "ddsde/error.hpp"

#include <functional>

namespace testing {

/// Error code thrown by f, or nullopt-like sentinel when nothing was thrown.
inline int thrown_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const ddsde::Error& e) {
        return static_cast<int>(e.code());
    }
    return -1;
}

inline int code(ddsde::ErrorCode c) { return static_cast<int>(c); }

} // namespace testing

#define CHECK_THROWS_CODE(expr, err) \
    CHECK(testing::thrown_code([&] { (void)(expr); }) == testing::code(err))
