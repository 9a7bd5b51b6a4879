#pragma once

// Numerically found Weyl-Heisenberg SIC fiducials (interleaved re, im),
// equiangular residual below 1e-12. Regenerate with find_fiducial.

namespace sparsecd::data {

inline constexpr double kFiducial2[] = {
    -0.35421410517278962, 0.29301404932498842,
    -0.8841301010884699, -0.083600831001283835,
};

inline constexpr double kFiducial3[] = {
    0.083253274045043055, 0.63270591982197755,
    0.096805852680998963, -0.074270570123129653,
    -0.60311861534911027, 0.46272298030535347,
};

inline constexpr double kFiducial4[] = {
    -0.094018508453610233, -0.38966646365219437,
    -0.16159892190922992, -0.11984421458893206,
    0.35690994168843337, -0.65995655799957942,
    -0.28932952823433716, 0.39013430893641088,
};

inline constexpr double kFiducial5[] = {
    -0.024615448923644999, -0.4849388092950167,
    -0.2391627845717183, -0.034783886218291753,
    0.060804935836326734, 0.41163472496643816,
    0.18617035051156447, -0.072905071831519411,
    -0.30685791878648239, -0.63130258703627162,
};

inline constexpr double kFiducial6[] = {
    0.43458545920097114, 0.069274643543881353,
    0.21229066698039928, -0.27906169041711387,
    -0.029084105422686815, 0.18879684343142278,
    -0.18442559755805987, 0.13371303880770385,
    -0.67119980241438415, 0.091210914251235273,
    0.21817165742790276, 0.29763091113537138,
};

inline constexpr double kFiducial7[] = {
    -0.44762304922798052, 0.45792889224034594,
    -0.14973577271112193, 0.093728360469008204,
    0.23857715990026915, 0.17190463532997499,
    0.030932365084719457, 0.39551863758638778,
    -0.039275389642814233, -0.05955259796939525,
    -0.31106331965260448, -0.2014288376331459,
    0.39295907158564386, -0.134264641444959,
};

inline constexpr double kFiducial8[] = {
    0.30809126142524168, -0.3408437163649109,
    -0.088960242066962167, 0.2992432509147181,
    -0.017371403759343446, -0.070297031392525827,
    0.050119421273218404, -0.18224830839210648,
    0.16772347837758825, 0.19508691430817571,
    -0.4221143508215201, 0.42703348360091065,
    -0.14077589006511945, -0.17603212812759961,
    0.40278259796308252, 0.10347885760775428,
};

inline constexpr double kFiducial9[] = {
    0.1859652251135632, -0.30938845036329005,
    -0.0695838982511819, 0.32380570801043934,
    0.28664940901063479, -0.25639881246541207,
    -0.19316253233996125, -0.14813812307459723,
    -0.20145704546402923, -0.29373692422861369,
    -0.1400528508802138, -0.14046212728837981,
    0.13604822618735798, 0.099570982515649928,
    0.024863040935529972, -0.031781477332484834,
    0.54859456210165369, 0.23583957496702063,
};

inline const double* bundled_fiducial_components(long d) {
  switch (d) {
    case 2: return kFiducial2;
    case 3: return kFiducial3;
    case 4: return kFiducial4;
    case 5: return kFiducial5;
    case 6: return kFiducial6;
    case 7: return kFiducial7;
    case 8: return kFiducial8;
    case 9: return kFiducial9;
    default: return nullptr;
  }
}

}  // namespace sparsecd::data
