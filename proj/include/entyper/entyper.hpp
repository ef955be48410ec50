#ifndef ENTYPER_ENTYPER_HPP_
#define ENTYPER_ENTYPER_HPP_

#include "entyper/config.hpp"
#include "entyper/context_encoder.hpp"
#include "entyper/corpus.hpp"
#include "entyper/error.hpp"
#include "entyper/esa_index.hpp"
#include "entyper/evaluation.hpp"
#include "entyper/surface_prior.hpp"
#include "entyper/text.hpp"
#include "entyper/type_inference.hpp"
#include "entyper/typedef_dsl.hpp"

#endif  // ENTYPER_ENTYPER_HPP_
