public class ParserTest {
  private static final char SEPARATOR = ',';

  @Test
  public void splitsIntoTwoParts() {
    List<String> parts = new Parser("a,b").split(SEPARATOR);
    assertEquals(Arrays.asList("a", "b"), parts);
  }
}
