#pragma once

#include <stdexcept>
#include <string>

namespace dre {

// Broad failure classes; the CLI maps each class to a distinct exit code.
enum class ErrorClass { kConfig, kData, kProvider, kParse, kInternal };

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& msg)
        : std::runtime_error(msg), class_(cls) {}

    ErrorClass error_class() const { return class_; }

private:
    ErrorClass class_;
};

#define DRE_ERROR_TYPE(NAME, CLASS)                       \
    struct NAME : Error {                                 \
        explicit NAME(const std::string& msg)             \
            : Error(ErrorClass::CLASS, msg) {}            \
    }

// corpus
DRE_ERROR_TYPE(MalformedRecord, kData);
DRE_ERROR_TYPE(DuplicateId, kData);
DRE_ERROR_TYPE(EmptyResponseSet, kData);
DRE_ERROR_TYPE(SampleTooLarge, kData);
DRE_ERROR_TYPE(GenerationParseFailure, kParse);

// encoder
DRE_ERROR_TYPE(EmptyText, kData);
DRE_ERROR_TYPE(BackendUnavailable, kProvider);
DRE_ERROR_TYPE(DimensionMismatch, kData);
DRE_ERROR_TYPE(ZeroVector, kData);
DRE_ERROR_TYPE(NormalizationDegenerate, kData);

// training / scoring
DRE_ERROR_TYPE(EmptyTrainingSet, kData);
DRE_ERROR_TYPE(EmptyEvaluationSet, kData);
DRE_ERROR_TYPE(NonFiniteLoss, kInternal);
DRE_ERROR_TYPE(UntrainedScorer, kConfig);
DRE_ERROR_TYPE(CheckpointFormatError, kData);

// gateway
DRE_ERROR_TYPE(ProviderError, kProvider);
DRE_ERROR_TYPE(MissingCredentials, kConfig);
DRE_ERROR_TYPE(TimeoutError, kProvider);
DRE_ERROR_TYPE(UnparseableJudgment, kParse);

// refine
DRE_ERROR_TYPE(OutOfRange, kData);
DRE_ERROR_TYPE(MissingInfluence, kData);

// eval harness
DRE_ERROR_TYPE(ConstantInput, kData);
DRE_ERROR_TYPE(LengthMismatch, kData);
DRE_ERROR_TYPE(DegenerateAgreement, kData);

// cli
DRE_ERROR_TYPE(ConfigError, kConfig);

#undef DRE_ERROR_TYPE

}  // namespace dre
