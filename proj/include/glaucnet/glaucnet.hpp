//=======================================================================
// Copyright (c) 2026 the glaucnet authors
// Distributed under the terms of the MIT License.
// (See accompanying file LICENSE or copy at
//  http://opensource.org/licenses/MIT)
//=======================================================================

#pragma once

#include "glaucnet/augment.hpp"
#include "glaucnet/dataset.hpp"
#include "glaucnet/error.hpp"
#include "glaucnet/experiment.hpp"
#include "glaucnet/fusion.hpp"
#include "glaucnet/image.hpp"
#include "glaucnet/layers.hpp"
#include "glaucnet/lbp.hpp"
#include "glaucnet/metrics.hpp"
#include "glaucnet/model.hpp"
#include "glaucnet/rng.hpp"
#include "glaucnet/tensor.hpp"
#include "glaucnet/train.hpp"
#include "glaucnet/tsne.hpp"
#include "glaucnet/types.hpp"
