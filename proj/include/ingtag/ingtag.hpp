#pragma once

// Ingredient phrase tagger: attention-based token classifier over eight
// attribute classes, with a linear-chain CRF baseline.

#include "ingtag/adam.hpp"
#include "ingtag/checkpoint.hpp"
#include "ingtag/corpus.hpp"
#include "ingtag/crf.hpp"
#include "ingtag/embeddings.hpp"
#include "ingtag/eval.hpp"
#include "ingtag/label.hpp"
#include "ingtag/model.hpp"
#include "ingtag/nn.hpp"
#include "ingtag/phrase.hpp"
#include "ingtag/pos_tagger.hpp"
#include "ingtag/rng.hpp"
#include "ingtag/tensor.hpp"
#include "ingtag/tokenizer.hpp"
