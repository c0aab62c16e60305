public class ConfigTest {
  @Test
  public void debugPropertyEnablesDebugMode() {
    Properties properties = new Properties();
    properties.setProperty("debug", "true");
    // Config reads the flag at construction time
    assertTrue(Config.from(properties).isDebug());
  }
}
