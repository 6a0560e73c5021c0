//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include <stdexcept>
#include <string>

namespace glaucnet {

/// Base class for every error thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (image files, manifests, config files).
class parse_error : public error {
public:
    using error::error;
};

/// Tensor/layer dimensions that do not fit together.
class shape_error : public error {
public:
    using error::error;
};

/// Filesystem-level failures (missing file, unwritable path, truncation).
class io_error : public error {
public:
    using error::error;
};

} // namespace glaucnet
