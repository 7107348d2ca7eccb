/* LU decomposition without pivoting: 4 outermost nests in 2 functions. */
#include <stdio.h>

#define N 48

void fill(double A[N][N], double B[N][N])
{
    int i, j;
    for (i = 0; i < N; i++)
        for (j = 0; j < N; j++)
            A[i][j] = (i == j) ? N + 1.0 : 1.0 / (i + j + 1);
    for (i = 0; i < N; i++)
        for (j = 0; j < N; j++)
            B[i][j] = A[i][j];
}

double lu(double A[N][N], double B[N][N])
{
    int i, j, k;
    double err = 0.0;
    for (k = 0; k < N; k++) {
        for (i = k + 1; i < N; i++) {
            A[i][k] /= A[k][k];
            for (j = k + 1; j < N; j++)
                A[i][j] -= A[i][k] * A[k][j];
        }
    }
    /* reconstruct L*U and compare against the saved matrix */
    for (i = 0; i < N; i++)
        for (j = 0; j < N; j++) {
            double s = 0.0;
            for (k = 0; k <= (i < j ? i : j); k++)
                s += (k == i ? 1.0 : A[i][k]) * A[k][j];
            err += (s - B[i][j]) * (s - B[i][j]);
        }
    return err;
}

int main(void)
{
    static double A[N][N], B[N][N];
    fill(A, B);
    double err = lu(A, B);
    printf("err=%.3e a00=%.6f ann=%.6f\n", err, A[0][0], A[N - 1][N - 1]);
    return 0;
}
