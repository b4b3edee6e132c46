#include <math.h>

void collide_pull(double * restrict _data_src,
                  double * restrict _data_dst,
                  const long _size_0,
                  const long _size_1,
                  const long _stride_src_0,
                  const long _stride_src_1,
                  const long _stride_src_2,
                  const long _stride_dst_0,
                  const long _stride_dst_1,
                  const long _stride_dst_2,
                  const double omega_e,
                  const double omega_o)
{
    for (long ctr_1 = 1; ctr_1 < _size_1 - 1; ++ctr_1) {
        for (long ctr_0 = 1; ctr_0 < _size_0 - 1; ++ctr_0) {
            const double f_0 = _data_src[ctr_0*_stride_src_0 + ctr_1*_stride_src_1 + 0*_stride_src_2];
            const double f_1 = _data_src[(ctr_0 + 1)*_stride_src_0 + ctr_1*_stride_src_1 + 1*_stride_src_2];
            const double f_2 = _data_src[ctr_0*_stride_src_0 + (ctr_1 + 1)*_stride_src_1 + 2*_stride_src_2];
            const double f_3 = _data_src[ctr_0*_stride_src_0 + (ctr_1 - 1)*_stride_src_1 + 3*_stride_src_2];
            const double f_4 = _data_src[(ctr_0 - 1)*_stride_src_0 + ctr_1*_stride_src_1 + 4*_stride_src_2];
            const double f_5 = _data_src[(ctr_0 + 1)*_stride_src_0 + (ctr_1 + 1)*_stride_src_1 + 5*_stride_src_2];
            const double f_6 = _data_src[(ctr_0 + 1)*_stride_src_0 + (ctr_1 - 1)*_stride_src_1 + 6*_stride_src_2];
            const double f_7 = _data_src[(ctr_0 - 1)*_stride_src_0 + (ctr_1 + 1)*_stride_src_1 + 7*_stride_src_2];
            const double f_8 = _data_src[(ctr_0 - 1)*_stride_src_0 + (ctr_1 - 1)*_stride_src_1 + 8*_stride_src_2];
            const double vel0Term = (f_4 + f_7 + f_8);
            const double vel1Term = (f_3 + f_6);
            const double rho = (f_0 + f_1 + f_2 + f_5 + vel0Term + vel1Term);
            const double xi_0 = (1.0/(rho));
            const double xi_1 = ((-1.0)*f_5);
            const double u_0 = (xi_0*(vel0Term + xi_1 + ((-1.0)*f_1) + ((-1.0)*f_6)));
            const double u_1 = (xi_0*(f_8 + vel1Term + xi_1 + ((-1.0)*f_2) + ((-1.0)*f_7)));
            const double u0Pu1 = (u_0 + u_1);
            const double xi_2 = (u_0*u_0);
            const double xi_3 = (1.5*rho);
            const double xi_4 = (u_1*u_1);
            const double commonQuadraticTerm = (rho + ((-1.0)*xi_2*xi_3) + ((-1.0)*xi_3*xi_4));
            const double xi_5 = ((-0.5)*f_1);
            const double xi_6 = (0.5*f_4);
            const double xi_7 = (0.1111111111111111*commonQuadraticTerm);
            const double xi_8 = (0.5*rho);
            const double dir_0 = (xi_5 + xi_7 + ((-1.0)*xi_6) + (xi_2*xi_8));
            const double xi_9 = (0.3333333333333333*rho);
            const double dir_1 = (xi_5 + xi_6 + ((-1.0)*u_0*xi_9));
            const double xi_10 = ((-0.5)*f_2);
            const double xi_11 = (0.5*f_3);
            const double dir_2 = (xi_10 + xi_7 + ((-1.0)*xi_11) + (xi_4*xi_8));
            const double dir_3 = (xi_10 + xi_11 + ((-1.0)*u_1*xi_9));
            const double xi_12 = ((-0.5)*f_5);
            const double xi_13 = (0.5*f_8);
            const double xi_14 = (0.027777777777777776*commonQuadraticTerm);
            const double xi_15 = (0.125*rho*(u0Pu1*u0Pu1));
            const double dir_4 = (xi_12 + xi_14 + xi_15 + ((-1.0)*xi_13));
            const double xi_16 = (0.08333333333333333*rho);
            const double dir_5 = (xi_12 + xi_13 + ((-1.0)*u0Pu1*xi_16));
            const double xi_17 = ((-0.5)*f_6);
            const double xi_18 = (0.5*f_7);
            const double xi_19 = (0.25*rho);
            const double dir_6 = (xi_14 + xi_17 + ((-1.0)*xi_15) + ((-1.0)*xi_18) + (xi_19*xi_2) + (xi_19*xi_4));
            const double dir_7 = (xi_17 + xi_18 + ((-1.0)*u_0*xi_16) + (u_1*xi_16));
            const double xi_20 = (dir_0*omega_e);
            const double xi_21 = (dir_1*omega_o);
            const double xi_22 = (dir_2*omega_e);
            const double xi_23 = (dir_3*omega_o);
            const double xi_24 = (dir_4*omega_e);
            const double xi_25 = (dir_5*omega_o);
            const double xi_26 = (dir_6*omega_e);
            const double xi_27 = (dir_7*omega_o);
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 0*_stride_dst_2] = (f_0 + (omega_e*(((-1.0)*f_0) + (0.4444444444444444*commonQuadraticTerm))));
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 1*_stride_dst_2] = (f_1 + xi_20 + xi_21);
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 2*_stride_dst_2] = (f_2 + xi_22 + xi_23);
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 3*_stride_dst_2] = (f_3 + xi_22 + ((-1.0)*xi_23));
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 4*_stride_dst_2] = (f_4 + xi_20 + ((-1.0)*xi_21));
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 5*_stride_dst_2] = (f_5 + xi_24 + xi_25);
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 6*_stride_dst_2] = (f_6 + xi_26 + xi_27);
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 7*_stride_dst_2] = (f_7 + xi_26 + ((-1.0)*xi_27));
            _data_dst[ctr_0*_stride_dst_0 + ctr_1*_stride_dst_1 + 8*_stride_dst_2] = (f_8 + xi_24 + ((-1.0)*xi_25));
        }
    }
}
