public class MatrixTest {
  @Test(timeout = 4000)
  public void testDiagonalMatrixIsIdentity() throws Throwable {
    int[][] cells = new int[2][2];
    cells[0][0] = 1;
    cells[1][1] = 1;
    Matrix matrix = new Matrix(cells);
    boolean isIdentity = matrix.isIdentity();
    assertTrue(isIdentity);
  }
}
