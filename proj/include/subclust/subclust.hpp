#pragma once

#include "subclust/checkpoint.hpp"
#include "subclust/conic.hpp"
#include "subclust/errors.hpp"
#include "subclust/inference.hpp"
#include "subclust/instance.hpp"
#include "subclust/losses.hpp"
#include "subclust/metrics.hpp"
#include "subclust/network.hpp"
#include "subclust/optimizer.hpp"
#include "subclust/rng.hpp"
#include "subclust/scene.hpp"
#include "subclust/sequential.hpp"
#include "subclust/training.hpp"
