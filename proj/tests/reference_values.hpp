// Generated by tests/oracle/reference.py (mpmath, 40 digits). Do not edit.
#pragma once
namespace ref {
inline constexpr double kMatern_s1_l1_r1 = 0.48335772459650765060;
inline constexpr double kGpLogJointN1 = -1.8378770664093454836;
inline constexpr double kLogEvidenceStd = -1.2655121234846453965;
inline constexpr double kEvidenceStd = 0.28209479177387814347;
inline constexpr double kAlphaHalfAtPosterior = 0.53112596601359845724;
inline constexpr double kSqrt60Over2 = 3.8729833462074168852;
inline constexpr double kStdNormalLogPdf0 = -0.91893853320467274178;
inline constexpr double kConjA_Elbo = -1.3792585792403120425;
inline constexpr double kConjA_Power1 = -0.27925857924031204252;
inline constexpr double kConjA_Power2 = 0.37731840681531236972;
inline constexpr double kConjA_Power3 = -0.55868336314140245328;
inline constexpr double kConjA_Bound3 = 0.27171824852679940782;
inline constexpr double kConjA_Bound5 = 0.27970742672648795873;
inline constexpr double kConjA_AlphaHalf = 0.51823140725291978269;
inline constexpr double kConjA_Cumulant3 = -1.2772806053522316232;
inline constexpr double kConjB_LogEvidence = -1.7150838991417502744;
inline constexpr double kConjB_PostMean = 1.0400000000000000000;
inline constexpr double kConjB_PostVar = 0.40000000000000000000;
inline constexpr double kBimodal_Elbo = -0.92984550228314919155;
inline constexpr double kBimodal_Surrogate3 = 5.0543717593586066152;
inline constexpr double kBimodal_AlphaMoment02 = 0.88329985110271845127;
inline constexpr double kBimodal_Mean = 0.80000000000000000000;
inline constexpr double kGpr2_Mean0 = 0.29950601044248754642;
inline constexpr double kGpr2_Mean1 = -0.20791995328456600577;
inline constexpr double kGpr2_Var0 = 0.20509435068437577442;
inline constexpr double kGpr2_Var1 = 0.20509435068437577442;
inline constexpr double kGpr2_Cov01 = 0.023870792210428077211;
inline constexpr double kGpr2_LogEvidence = -2.4701657476030969464;
inline constexpr double kGpc2_Evidence = 0.22929017589006871289;
}  // namespace ref
