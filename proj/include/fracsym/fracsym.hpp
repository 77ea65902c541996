#pragma once

#include "fracsym/domain.hpp"
#include "fracsym/elliptic.hpp"
#include "fracsym/experiments.hpp"
#include "fracsym/extension.hpp"
#include "fracsym/fraclap.hpp"
#include "fracsym/io.hpp"
#include "fracsym/parabolic.hpp"
#include "fracsym/rearrange.hpp"
#include "fracsym/spectral.hpp"
