// spmm_kernel: grid 7, block 256, N 4
// note: GPUGroup variable 'jpos1' is undefined; read as GPUThread variable 'fpos1'

template <typename T, int G>
__device__ void segReduceGroup(T* array, int idx, T value);
__device__ int binarySearchBefore(const int* array, int lo, int hi, int target);

__global__ void spmm_kernel(int A1_dimension, int A2_dimension, int B2_dimension,
    int C2_dimension, const int* __restrict__ A2_pos, const int* __restrict__ A2_crd,
    const double* __restrict__ A_vals, const double* __restrict__ B_vals, double* __restrict__ C_vals,
    const int* __restrict__ i_blockStarts) {
  int block = blockIdx.x;
  int warp = threadIdx.x / 64;
  int fpos1 = threadIdx.x % 64;
  for (int ki = 0; ki < 1; ki++) {
    int pA2_begin = i_blockStarts[block];
    int pA2_end = min(i_blockStarts[block + 1] + 1, A1_dimension);
    int fposA = block * 64 + fpos1;
    int i_pos = binarySearchBefore(A2_pos, pA2_begin, pA2_end, fposA);
    int i = i_pos;
    int k = warp + ki;
    double val = 0.0;
    if (fposA >= A2_pos[A1_dimension]) {
      val = 0.0;
    } else {
      int f = A2_crd[fposA];
      int kB = f * B2_dimension + k;
      while (fposA == A2_pos[i_pos + 1]) {
        i_pos = i_pos + 1;
        i = i_pos;
      }
      val = A_vals[fposA] * B_vals[kB];
    }
    int kC = i * C2_dimension + k;
    segReduceGroup<double,32>(C_vals, kC, val);
  }
}
