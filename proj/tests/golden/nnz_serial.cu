// spmm_kernel: grid 1, block 64, N 4

__device__ int binarySearchBefore(const int* array, int lo, int hi, int target);

__global__ void spmm_kernel(int A1_dimension, int A2_dimension, int B2_dimension,
    int C2_dimension, const int* __restrict__ A2_pos, const int* __restrict__ A2_crd,
    const double* __restrict__ A_vals, const double* __restrict__ B_vals, double* __restrict__ C_vals,
    const int* __restrict__ i_blockStarts) {
  int block = blockIdx.x;
  int warp = threadIdx.x;
  int thread = 0;
  for (int dense_val = 0; dense_val < 4; dense_val++) {
    int pA2_begin = i_blockStarts[block];
    int pA2_end = min(i_blockStarts[block + 1] + 1, A1_dimension);
    int fposStart = block * 2048 + warp * 32;
    if (fposStart >= A2_pos[A1_dimension]) {
      break;
    }
    int i_pos = binarySearchBefore(A2_pos, pA2_begin, pA2_end, fposStart);
    int i = i_pos;
    int k = dense_val + thread;
    double tnnzC = 0.0;
    for (int nnz = 0; nnz < 32; nnz++) {
      int fposA = block * 2048 + warp * 32 + nnz;
      if (fposA >= A2_pos[A1_dimension]) {
        break;
      }
      int f = A2_crd[fposA];
      int kB = f * B2_dimension + k;
      if (fposA == A2_pos[i_pos + 1]) {
        int kC = i * C2_dimension + k;
        atomicAdd(&C_vals[kC], tnnzC);
        tnnzC = 0.0;
        while (fposA == A2_pos[i_pos + 1]) {
          i_pos = i_pos + 1;
          i = i_pos;
        }
      }
      tnnzC = tnnzC + A_vals[fposA] * B_vals[kB];
    }
    int kC = i * C2_dimension + k;
    atomicAdd(&C_vals[kC], tnnzC);
  }
}
