public class BufferTest {
  @Test
  public void digitsAreAppendedInOrder() {
    StringBuilder builder = new StringBuilder();
    int digit = 0;
    while (digit < 3) {
      builder.append(digit);
      digit++;
    }
    assertEquals("012", builder.toString());
  }
}
