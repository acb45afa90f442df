// Generated by tests/oracle/reference_model.py; do not edit by hand.
#pragma once

namespace refdata {

inline constexpr int kEncIds[] = {5, 9, 3, 17, 2, 11};
inline constexpr int kEncMask[] = {1, 1, 1, 1, 1, 0};
inline constexpr int kDecPrefix[] = {0, 4, 7, 21};

inline constexpr float kEncoderStatesUntied[48] = {1.04463089f, -0.0592779629f, 0.985755444f, -0.75959301f, 1.24632752f, -1.3468982f, -1.329018f, -0.56227541f, -0.035087008f, 0.0777447f, 0.545415998f, 0.154980659f, -0.630250454f, -1.4807986f, -2.23668051f, 0.318239272f, -0.523396492f, 0.179820403f, -0.350043625f, -1.80582833f, 0.814963043f, 1.12088406f, 0.798143327f, 1.24335372f, 1.00426364f, -1.84361696f, 0.40356338f, 0.708856285f, 0.680575132f, -0.0106777018f, -0.910962641f, -1.19067049f, 0.275586307f, -0.0438689888f, -1.087075f, -0.831280112f, -0.823734999f, 1.26709366f, 1.47062242f, 1.2664125f, 0.455619305f, 2.05789924f, -1.43794191f, 0.917327702f, 0.281933218f, -0.53546381f, 0.275551021f, -0.263180971f};
inline constexpr float kDecoderLogitsUntied[128] = {-9.20329475f, 0.195031926f, 1.5725311f, -5.62207031f, -0.364545345f, 3.92126012f, 0.726419747f, -5.26394272f, -5.78020859f, -1.96700156f, -3.20903993f, -0.16114299f, -4.32239723f, 1.18695724f, -0.364988327f, 4.89580059f, 3.13504124f, -4.13849831f, -8.11355686f, 2.04775405f, 1.90193844f, -5.27818346f, -3.92783999f, -0.546573997f, -5.19879389f, -6.15886545f, -0.473506302f, -3.15349078f, -4.13419437f, 3.73610687f, -1.7652688f, -0.751858592f, -6.74036407f, -0.463024169f, 0.8603701f, -6.80616999f, 0.379001737f, 3.54990363f, 3.14520788f, -8.71037292f, -5.79291153f, -1.7290535f, -7.04875088f, 2.26040387f, -5.63354921f, 2.11154008f, 0.599270225f, 2.19520831f, 3.8177402f, -1.2656064f, -8.46033955f, 4.25465488f, 2.13385868f, -2.90997934f, -3.57480001f, -4.75258589f, -0.526476622f, -4.03161192f, 1.11226702f, -6.16995573f, -5.15873766f, 1.8995322f, 1.07628036f, -0.206707582f, -5.6322608f, 1.55961514f, -0.505013943f, 1.5382998f, -8.25835323f, 5.35453558f, 0.371539593f, 1.38199937f, 2.56932998f, -1.92829168f, -0.785651386f, -5.19288588f, -2.53673363f, -2.28318977f, -4.6323514f, -5.17355776f, -1.67696643f, -4.67837191f, -1.19122183f, -4.92498446f, 0.304282427f, -4.33333921f, 2.3293376f, 4.92423916f, -3.4778142f, 0.108664617f, 4.54959726f, 3.81032348f, 2.38456488f, 3.75851107f, -3.63445425f, -2.7402308f, -10.2206345f, 4.96883821f, 1.89599276f, -1.0513972f, -4.38373947f, 3.48679256f, 5.74606514f, -0.0848422721f, -2.46213508f, -0.964215398f, -7.51712847f, 1.27879143f, -6.20773983f, 5.95140171f, 4.08420849f, -4.90476704f, 0.399237871f, 4.30063868f, -2.68940663f, 3.02180028f, 1.30111074f, 0.720351398f, -4.95873976f, -7.74769831f, 0.769754589f, 0.827274561f, 4.59939528f, 0.708875775f, -3.4288013f, 6.09588337f, 3.63676167f, 1.39780843f};

inline constexpr float kEncoderStatesTied[48] = {0.0328008607f, -1.34152353f, 1.37724125f, -0.462362528f, -0.205723539f, 2.02312756f, 0.55998826f, 0.0230588522f, -0.315010995f, -0.442742079f, -0.309191525f, -1.77785444f, -1.60834575f, -1.21297812f, -0.125091776f, -0.32420966f, -0.637677312f, -0.064846538f, -0.676279128f, 0.637833953f, 0.558143675f, -2.29379225f, -1.05810797f, 0.237224296f, 0.251152128f, 1.65721607f, -1.07882524f, 0.0124215763f, 1.54634488f, 1.20378017f, 0.233348355f, 0.020087257f, -2.30256748f, 0.161876798f, -0.16800113f, -0.558546007f, 0.814467788f, -0.888216853f, 0.693149328f, -0.0239895284f, -1.6310128f, -1.24438715f, 0.690329909f, -0.428419173f, -0.0325422511f, 1.63527107f, 0.270556867f, -0.57315886f};
inline constexpr float kDecoderLogitsTied[128] = {0f, -0.411497384f, -3.22690034f, 2.45817423f, 1.65615296f, -0.0173267834f, 0.130564213f, -1.68400347f, 0.0158321187f, 1.72153282f, 0.816527545f, -0.139700264f, 0.904765308f, 2.6708262f, -1.01117587f, -0.0749142691f, -1.75682306f, -3.07199073f, 0.35706985f, 4.36186218f, -0.838466167f, -1.88480067f, -1.22677183f, 1.78139031f, 1.28639936f, 3.04087472f, 1.79025781f, 0.932036638f, 4.28840637f, -3.26022148f, -0.107165515f, 0.0635164976f, 0f, -0.140549943f, -3.70970154f, 0.900245309f, 2.32064629f, 0.739581347f, -1.50728917f, -1.71959496f, -0.316413701f, 2.46824551f, 0.555934489f, -0.484490246f, 0.435655266f, 1.6248436f, -2.3421793f, -0.684673369f, -0.729535818f, -3.21287942f, 0.787268162f, 4.04361248f, -0.720382154f, -3.14190555f, 0.330593258f, 1.44567847f, 0.948276997f, 2.42183399f, 0.770214319f, 0.615161777f, 2.9503727f, -2.98786926f, 0.295159489f, 0.458058149f, 0f, -0.810900688f, -5.60213614f, -1.17978168f, 1.16029298f, 3.13229537f, 0.620128095f, 2.18536592f, -0.844646335f, -1.12962484f, 2.47736096f, 0.465138435f, 3.0987246f, 2.24098897f, -0.556760907f, -1.63397384f, -3.29029012f, -2.35022974f, -0.187000871f, 1.60592747f, -1.24861085f, 0.142606914f, -3.39280367f, -0.706203282f, -0.401296109f, 1.96960831f, -0.167171195f, 0.420743495f, 1.64070785f, -5.32124805f, 1.61291265f, 0.291782975f, 0f, 0.939761519f, -0.418274075f, 4.77995777f, 0.210267022f, -5.05678129f, 5.63082027f, -1.05108619f, 2.28772473f, -0.970527112f, 0.963288486f, -2.93094373f, 1.66256237f, 1.07016218f, 1.76930106f, 0.461012423f, 0.799778819f, -2.03337526f, -1.71512735f, -2.79811287f, 0.908354521f, 4.3352232f, -1.64695835f, 3.3702457f, 3.51732397f, 2.13388991f, 4.09384966f, -2.25225568f, 5.41046143f, 3.02565169f, 0.674344659f, 0.621849239f};

}  // namespace refdata
