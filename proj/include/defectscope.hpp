#pragma once

#include "defectscope/commutator.hpp"
#include "defectscope/conslaw.hpp"
#include "defectscope/errors.hpp"
#include "defectscope/experiment.hpp"
#include "defectscope/fibration.hpp"
#include "defectscope/field.hpp"
#include "defectscope/field_io.hpp"
#include "defectscope/flux.hpp"
#include "defectscope/grid.hpp"
#include "defectscope/hmeasure.hpp"
#include "defectscope/mesh.hpp"
#include "defectscope/parallel.hpp"
#include "defectscope/partition.hpp"
#include "defectscope/point.hpp"
#include "defectscope/relax.hpp"
#include "defectscope/report_io.hpp"
#include "defectscope/sequence.hpp"
#include "defectscope/spectral.hpp"
#include "defectscope/symbols.hpp"
