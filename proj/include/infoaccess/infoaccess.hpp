#pragma once

#include "infoaccess/attributes.hpp"
#include "infoaccess/cascade.hpp"
#include "infoaccess/clustering.hpp"
#include "infoaccess/error.hpp"
#include "infoaccess/graph.hpp"
#include "infoaccess/representation_io.hpp"
#include "infoaccess/signature.hpp"
#include "infoaccess/stats.hpp"
